//! Synthetic crowds with a known correct answer.
//!
//! Each respondent is a solver (votes the correct answer) with the problem's
//! solver rate, otherwise a non-solver who votes a wrong answer, favouring
//! one "attractor". Predicted support mixes a false-consensus prior (own
//! vote looks popular) with, for solvers, insight into the crowd's true
//! expected vote distribution. That asymmetry is what lets prediction-based
//! methods recover the answer when the majority is wrong.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnswerSet, Response, ResponseSet};
use crate::rng::{derive_seed_index, rng_for};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfidenceModel {
    pub solver_mean: f64,
    pub solver_spread: f64,
    pub non_solver_mean: f64,
    pub non_solver_spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionModel {
    /// Support added to a respondent's own answer before normalizing
    /// (false consensus).
    pub consensus_weight: f64,
    /// Per-problem relative spread `h` of that boost: it is scaled by
    /// `U(1-h, 1+h)`.
    #[serde(default)]
    pub consensus_heterogeneity: f64,
    /// Share of the consensus boost solvers replace with an accurate view of
    /// the crowd (1 = solvers predict the expected vote distribution).
    pub insight_weight: f64,
    /// Fraction by which non-solvers underrate the correct answer's popularity.
    #[serde(default)]
    pub correct_neglect: f64,
    /// Extra support solvers add to their own answer because it looks
    /// obvious to them.
    #[serde(default)]
    pub solver_overclaim: f64,
    /// Extra support solvers give the attractor, anticipating its pull.
    #[serde(default)]
    pub attractor_foresight: f64,
    /// Log-scale sd of multiplicative noise on each entry before normalizing.
    pub noise: f64,
    /// Noise for the entry of the respondent's own answer; `noise` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub own_noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Inclusive range for the number of answers per problem.
    pub m_range: [usize; 2],
    pub solver_rate: f64,
    /// Per-problem solver rate is drawn uniformly from `solver_rate ± jitter`.
    #[serde(default)]
    pub solver_rate_jitter: f64,
    /// Probability a non-solver votes the attractor rather than another wrong answer.
    pub attractor_strength: f64,
    /// Fixed correct answer; random per problem when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_index: Option<usize>,
    /// Fixed attractor; random wrong answer per problem when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attractor_index: Option<usize>,
    pub confidence: ConfidenceModel,
    pub prediction: PredictionModel,
    pub seed: u64,
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.m_range;
        if lo < 2 || hi < lo {
            return Err(Error::InvalidConfig(format!(
                "m_range must satisfy 2 <= min <= max, got {lo}..{hi}"
            )));
        }
        if !(self.solver_rate > 0.0 && self.solver_rate <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "solver_rate must lie in (0, 1], got {}",
                self.solver_rate
            )));
        }
        unit("solver_rate_jitter", self.solver_rate_jitter)?;
        unit("attractor_strength", self.attractor_strength)?;
        let c = &self.confidence;
        unit("confidence.solver_mean", c.solver_mean)?;
        unit("confidence.non_solver_mean", c.non_solver_mean)?;
        if !(c.solver_spread >= 0.0 && c.non_solver_spread >= 0.0) {
            return Err(Error::InvalidConfig("confidence spreads must be non-negative".into()));
        }
        let p = &self.prediction;
        unit("prediction.consensus_weight", p.consensus_weight)?;
        unit("prediction.insight_weight", p.insight_weight)?;
        unit("prediction.consensus_heterogeneity", p.consensus_heterogeneity)?;
        unit("prediction.correct_neglect", p.correct_neglect)?;
        unit("prediction.solver_overclaim", p.solver_overclaim)?;
        unit("prediction.attractor_foresight", p.attractor_foresight)?;
        for v in [Some(p.noise), p.own_noise].into_iter().flatten() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "prediction noise must be non-negative, got {v}"
                )));
            }
        }
        for (name, idx) in [
            ("correct_index", self.correct_index),
            ("attractor_index", self.attractor_index),
        ] {
            if let Some(i) = idx {
                if i >= lo {
                    return Err(Error::InvalidConfig(format!(
                        "{name} {i} must be below the smallest m ({lo})"
                    )));
                }
            }
        }
        if self.correct_index.is_some() && self.correct_index == self.attractor_index {
            return Err(Error::InvalidConfig(
                "attractor_index must differ from correct_index".into(),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Named scenarios: `easy-majority`, `hidden-expertise`,
/// `overconfident-crowd`, `mixed-battery`.
pub fn presets() -> Vec<ScenarioConfig> {
    let neutral_conf = ConfidenceModel {
        solver_mean: 0.7,
        solver_spread: 0.15,
        non_solver_mean: 0.7,
        non_solver_spread: 0.15,
    };
    vec![
        ScenarioConfig {
            name: "easy-majority".into(),
            m_range: [3, 5],
            solver_rate: 0.8,
            solver_rate_jitter: 0.05,
            attractor_strength: 0.5,
            correct_index: None,
            attractor_index: None,
            confidence: neutral_conf,
            prediction: PredictionModel {
                consensus_weight: 0.5,
                consensus_heterogeneity: 0.0,
                insight_weight: 0.5,
                correct_neglect: 0.0,
                solver_overclaim: 0.0,
                attractor_foresight: 0.0,
                noise: 0.2,
                own_noise: None,
            },
            seed: 1,
        },
        ScenarioConfig {
            name: "hidden-expertise".into(),
            m_range: [3, 5],
            solver_rate: 0.3,
            solver_rate_jitter: 0.2,
            attractor_strength: 0.85,
            correct_index: None,
            attractor_index: None,
            confidence: neutral_conf,
            prediction: PredictionModel {
                consensus_weight: 0.5,
                consensus_heterogeneity: 0.0,
                insight_weight: 0.0,
                correct_neglect: 0.6,
                solver_overclaim: 0.0,
                attractor_foresight: 0.6,
                noise: 0.25,
                own_noise: Some(0.25),
            },
            seed: 2,
        },
        ScenarioConfig {
            name: "overconfident-crowd".into(),
            m_range: [3, 5],
            solver_rate: 0.4,
            solver_rate_jitter: 0.1,
            attractor_strength: 0.7,
            correct_index: None,
            attractor_index: None,
            confidence: ConfidenceModel {
                solver_mean: 0.45,
                solver_spread: 0.15,
                non_solver_mean: 0.85,
                non_solver_spread: 0.1,
            },
            prediction: PredictionModel {
                consensus_weight: 0.6,
                consensus_heterogeneity: 0.0,
                insight_weight: 0.7,
                correct_neglect: 0.0,
                solver_overclaim: 0.0,
                attractor_foresight: 0.0,
                noise: 0.25,
                own_noise: None,
            },
            seed: 3,
        },
        ScenarioConfig {
            name: "mixed-battery".into(),
            m_range: [3, 5],
            solver_rate: 0.28,
            solver_rate_jitter: 0.2,
            attractor_strength: 0.6,
            correct_index: None,
            attractor_index: None,
            confidence: neutral_conf,
            prediction: PredictionModel {
                consensus_weight: 0.6,
                consensus_heterogeneity: 0.0,
                insight_weight: 0.7,
                correct_neglect: 0.0,
                solver_overclaim: 0.0,
                attractor_foresight: 0.0,
                noise: 0.3,
                own_noise: None,
            },
            seed: 4,
        },
    ]
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

fn draw_confidence<R: Rng>(rng: &mut R, mean: f64, spread: f64) -> f64 {
    if spread == 0.0 {
        return mean;
    }
    Normal::new(mean, spread)
        .expect("spread validated")
        .sample(rng)
        .clamp(0.0, 1.0)
}

/// Generates `n_problems` labeled response pools of `n_respondents` each.
/// Problem `k` is named `{name}-{k:04}` and depends only on the seed and `k`.
pub fn generate(config: &ScenarioConfig, n_problems: usize, n_respondents: usize) -> Result<Vec<ResponseSet>> {
    config.validate()?;
    if n_respondents == 0 {
        return Err(Error::InvalidConfig("n_respondents must be positive".into()));
    }
    let base = rng_for(config.seed, &config.name).random::<u64>();
    (0..n_problems)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_index(base, k as u64));
            generate_problem(config, &format!("{}-{k:04}", config.name), n_respondents, &mut rng)
        })
        .collect()
}

fn generate_problem<R: Rng>(config: &ScenarioConfig, problem_id: &str, n: usize, rng: &mut R) -> Result<ResponseSet> {
    let [lo, hi] = config.m_range;
    let m = rng.random_range(lo..=hi);
    let correct = config.correct_index.unwrap_or_else(|| rng.random_range(0..m));
    let attractor = config.attractor_index.unwrap_or_else(|| {
        let k = rng.random_range(0..m - 1);
        if k >= correct {
            k + 1
        } else {
            k
        }
    });
    let others: Vec<usize> = (0..m).filter(|&a| a != correct && a != attractor).collect();
    let j = config.solver_rate_jitter;
    let rate = if j > 0.0 {
        (config.solver_rate + rng.random_range(-j..=j)).clamp(0.02, 1.0)
    } else {
        config.solver_rate
    };
    let pull = if others.is_empty() {
        1.0
    } else {
        config.attractor_strength
    };

    // the crowd's expected vote distribution, known in part to solvers
    let mut expected = vec![0.0; m];
    expected[correct] = rate;
    expected[attractor] = (1.0 - rate) * pull;
    for &o in &others {
        expected[o] = (1.0 - rate) * (1.0 - pull) / others.len() as f64;
    }

    let p = &config.prediction;
    let lognormal = |sd: f64| (sd > 0.0).then(|| LogNormal::new(0.0, sd).expect("noise validated"));
    let noise = lognormal(p.noise);
    let own_noise = lognormal(p.own_noise.unwrap_or(p.noise));
    let h = p.consensus_heterogeneity;
    let inflation = p.consensus_weight
        * if h > 0.0 {
            rng.random_range(1.0 - h..=1.0 + h)
        } else {
            1.0
        };
    let mut responses = Vec::with_capacity(n);
    for i in 0..n {
        let solver = rng.random::<f64>() < rate;
        let vote = if solver {
            correct
        } else if rng.random::<f64>() < pull {
            attractor
        } else {
            others[rng.random_range(0..others.len())]
        };
        let (mean, spread) = if solver {
            (config.confidence.solver_mean, config.confidence.solver_spread)
        } else {
            (config.confidence.non_solver_mean, config.confidence.non_solver_spread)
        };
        let confidence = draw_confidence(rng, mean, spread);
        let own_boost = if solver {
            (1.0 - p.insight_weight) * inflation + p.solver_overclaim
        } else {
            inflation
        };
        let mut ps: Vec<f64> = (0..m)
            .map(|a| {
                let mut base = expected[a];
                if a == vote {
                    base += own_boost;
                }
                if a == correct && !solver {
                    base *= 1.0 - p.correct_neglect;
                }
                if a == attractor && solver {
                    base += p.attractor_foresight;
                }
                match if a == vote { &own_noise } else { &noise } {
                    Some(d) => base * d.sample(rng),
                    None => base,
                }
            })
            .collect();
        let sum: f64 = ps.iter().sum();
        ps.iter_mut().for_each(|v| *v /= sum);
        responses.push(Response {
            respondent_id: format!("r{i:04}"),
            vote,
            confidence,
            predicted_support: ps,
        });
    }
    ResponseSet::new(AnswerSet::new(problem_id, m, Some(correct))?, responses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{majority_rule, surprisingly_popular};

    #[test]
    fn presets_round_trip_through_toml() {
        let all = presets();
        assert_eq!(all.len(), 4);
        for p in all {
            let text = p.to_toml().unwrap();
            assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), p);
        }
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn all_solvers_without_noise() {
        let mut c = preset("easy-majority").unwrap();
        c.solver_rate = 1.0;
        c.solver_rate_jitter = 0.0;
        c.prediction.noise = 0.0;
        for rs in generate(&c, 10, 30).unwrap() {
            let a = rs.answer_set().correct_index.unwrap();
            assert!(rs.responses().iter().all(|r| r.vote == a));
            assert_eq!(majority_rule(&rs).chosen, a);
        }
    }

    #[test]
    fn solver_fraction_matches_rate() {
        let mut c = preset("mixed-battery").unwrap();
        c.solver_rate = 0.28;
        c.solver_rate_jitter = 0.0;
        c.m_range = [3, 3];
        let sets = generate(&c, 334, 30).unwrap();
        let (mut solvers, mut total) = (0, 0);
        for rs in &sets {
            let a = rs.answer_set().correct_index.unwrap();
            solvers += rs.responses().iter().filter(|r| r.vote == a).count();
            total += rs.len();
        }
        let f = solvers as f64 / total as f64;
        assert!(total >= 10_000 && (f - 0.28).abs() <= 0.03, "{f}");
    }

    #[test]
    fn hidden_expertise_separates_sp_from_mr() {
        let sets = generate(&preset("hidden-expertise").unwrap(), 200, 30).unwrap();
        let (mut mr, mut sp) = (0, 0);
        for rs in &sets {
            let a = rs.answer_set().correct_index.unwrap();
            mr += usize::from(majority_rule(rs).chosen == a);
            sp += usize::from(surprisingly_popular(rs).chosen == a);
        }
        assert!(sp > 100 && mr < 100, "sp {sp} mr {mr}");
    }

    #[test]
    fn deterministic_and_validated() {
        let c = preset("overconfident-crowd").unwrap();
        assert_eq!(generate(&c, 3, 20).unwrap(), generate(&c, 3, 20).unwrap());
        let mut bad = c.clone();
        bad.solver_rate = 0.0;
        assert!(matches!(generate(&bad, 1, 5), Err(Error::InvalidConfig(_))));
        let mut bad = c.clone();
        bad.correct_index = Some(1);
        bad.attractor_index = Some(1);
        assert!(bad.validate().is_err());
    }
}
