//! Classifier-driven aggregation.
//!
//! RCR-Agg classifies every response and combines the classifications of
//! each answer's supporters with one of five strategies; `maj` and `prop`
//! need a tie-breaker measure, giving nine valid combinations. ACR-Agg
//! classifies every answer and resolves the result with a three-case rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::acr::acr_features_all;
use crate::features::rcr::rcr_features_all;
use crate::features::RcrOptions;
use crate::learners::ProbabilisticClassifier;
use crate::model::ResponseSet;
use crate::result::{argmax_lowest, argmax_set, AggregationResult};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Maj,
    Prop,
    Wm,
    Avgp,
    Maxp,
}

/// Probability-based measures; also the valid tie-breakers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Wm,
    Avgp,
    Maxp,
}

impl Strategy {
    fn as_measure(self) -> Option<Measure> {
        match self {
            Strategy::Wm => Some(Measure::Wm),
            Strategy::Avgp => Some(Measure::Avgp),
            Strategy::Maxp => Some(Measure::Maxp),
            Strategy::Maj | Strategy::Prop => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Strategy::Maj => "maj",
            Strategy::Prop => "prop",
            Strategy::Wm => "wm",
            Strategy::Avgp => "avgp",
            Strategy::Maxp => "maxp",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maj" => Ok(Strategy::Maj),
            "prop" => Ok(Strategy::Prop),
            "wm" => Ok(Strategy::Wm),
            "avgp" => Ok(Strategy::Avgp),
            "maxp" => Ok(Strategy::Maxp),
            other => Err(Error::InvalidStrategy(format!("unknown strategy `{other}`"))),
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::from_str(s)?
            .as_measure()
            .ok_or_else(|| Error::InvalidStrategy(format!("`{s}` cannot break ties")))
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Wm => "wm",
            Measure::Avgp => "avgp",
            Measure::Maxp => "maxp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "StrategySpecRepr", into = "StrategySpecRepr")]
pub struct StrategySpec {
    strategy: Strategy,
    tie_breaker: Option<Measure>,
}

#[derive(Serialize, Deserialize)]
struct StrategySpecRepr {
    strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tie_breaker: Option<Measure>,
}

impl TryFrom<StrategySpecRepr> for StrategySpec {
    type Error = Error;

    fn try_from(r: StrategySpecRepr) -> Result<Self> {
        StrategySpec::new(r.strategy, r.tie_breaker)
    }
}

impl From<StrategySpec> for StrategySpecRepr {
    fn from(s: StrategySpec) -> Self {
        StrategySpecRepr {
            strategy: s.strategy,
            tie_breaker: s.tie_breaker,
        }
    }
}

impl StrategySpec {
    pub fn new(strategy: Strategy, tie_breaker: Option<Measure>) -> Result<Self> {
        match (strategy.as_measure(), tie_breaker) {
            (None, None) => Err(Error::InvalidStrategy(format!(
                "`{}` needs a tie-breaker",
                strategy.name()
            ))),
            (Some(_), Some(t)) => Err(Error::InvalidStrategy(format!(
                "`{}` takes no tie-breaker (got `{t}`)",
                strategy.name()
            ))),
            _ => Ok(Self { strategy, tie_breaker }),
        }
    }

    /// Parses `prop/avgp` or `wm`. A separately supplied tie-breaker is used
    /// only when the strategy needs one, so a CLI default does not reject `wm`.
    pub fn parse(strategy: &str, tie_breaker: Option<&str>) -> Result<Self> {
        if let Some((s, t)) = strategy.split_once('/') {
            return Self::new(s.parse()?, Some(t.parse()?));
        }
        let strategy: Strategy = strategy.parse()?;
        let tie_breaker = match strategy.as_measure() {
            Some(_) => None,
            None => tie_breaker.map(str::parse).transpose()?,
        };
        Self::new(strategy, tie_breaker)
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn tie_breaker(&self) -> Option<Measure> {
        self.tie_breaker
    }

    /// All nine valid combinations.
    pub fn all() -> Vec<Self> {
        let mut out = vec![];
        for m in [Strategy::Maxp, Strategy::Avgp, Strategy::Wm] {
            out.push(Self::new(m, None).unwrap());
        }
        for s in [Strategy::Maj, Strategy::Prop] {
            for t in [Measure::Avgp, Measure::Maxp, Measure::Wm] {
                out.push(Self::new(s, Some(t)).unwrap());
            }
        }
        out
    }
}

impl Default for StrategySpec {
    fn default() -> Self {
        default_spec()
    }
}

/// `prop` with `avgp` as tie-breaker.
pub fn default_spec() -> StrategySpec {
    StrategySpec {
        strategy: Strategy::Prop,
        tie_breaker: Some(Measure::Avgp),
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tie_breaker {
            Some(t) => write!(f, "{}/{t}", self.strategy.name()),
            None => f.write_str(self.strategy.name()),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedResponse {
    pub index: usize,
    pub vote: usize,
    pub probability_true: f64,
    pub label: bool,
}

/// Per-answer tallies over classified supporters.
#[derive(Debug, Clone, Default)]
struct SupporterTally {
    count: usize,
    true_count: usize,
    sum: f64,
    max: f64,
}

impl SupporterTally {
    fn measure(&self, m: Measure) -> f64 {
        match m {
            Measure::Wm => self.sum,
            Measure::Avgp => self.sum / self.count as f64,
            Measure::Maxp => self.max,
        }
    }
}

pub fn classify_responses(
    rs: &ResponseSet,
    model: &ProbabilisticClassifier,
    threshold: f64,
    opts: &RcrOptions,
) -> Result<Vec<ClassifiedResponse>> {
    rcr_features_all(rs, opts)
        .iter()
        .zip(rs.responses())
        .enumerate()
        .map(|(index, (f, r))| {
            let probability_true = model.predict_proba(&f.model_row(opts))?;
            Ok(ClassifiedResponse {
                index,
                vote: r.vote,
                probability_true,
                label: probability_true >= threshold,
            })
        })
        .collect()
}

/// Combine response classifications into an answer choice.
///
/// Only answers with at least one supporter are candidates (others score
/// `-inf`). For `maj`/`prop`, answers tied on the primary score are ranked by
/// the tie-breaker measure; a remaining tie goes to the lowest index.
pub fn combine_classifications(
    m: usize,
    classified: &[ClassifiedResponse],
    spec: StrategySpec,
    method_name: &str,
) -> AggregationResult {
    let mut tally = vec![SupporterTally::default(); m];
    for c in classified {
        let t = &mut tally[c.vote];
        t.count += 1;
        t.true_count += usize::from(c.label);
        t.sum += c.probability_true;
        t.max = if t.count == 1 {
            c.probability_true
        } else {
            t.max.max(c.probability_true)
        };
    }
    let score = |t: &SupporterTally, f: &dyn Fn(&SupporterTally) -> f64| {
        if t.count == 0 {
            f64::NEG_INFINITY
        } else {
            f(t)
        }
    };
    let primary: Vec<f64> = tally
        .iter()
        .map(|t| match spec.strategy {
            Strategy::Maj => score(t, &|t| t.true_count as f64),
            Strategy::Prop => score(t, &|t| t.true_count as f64 / t.count as f64),
            s => score(t, &|t| t.measure(s.as_measure().unwrap())),
        })
        .collect();

    let (chosen, tie_broken) = match spec.tie_breaker {
        None => argmax_lowest(&primary),
        Some(tb) => {
            let top = argmax_set(&primary);
            if top.len() == 1 {
                (top[0], false)
            } else {
                // includes the no-True-responses case: every candidate ties at 0
                let secondary: Vec<f64> = (0..m)
                    .map(|a| {
                        if top.contains(&a) {
                            tally[a].measure(tb)
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                (argmax_lowest(&secondary).0, true)
            }
        }
    };
    AggregationResult {
        method_name: method_name.to_string(),
        chosen,
        scores: primary,
        tie_broken,
        probabilities: Some(classified.iter().map(|c| c.probability_true).collect()),
    }
}

pub fn rcr_aggregate(
    rs: &ResponseSet,
    model: &ProbabilisticClassifier,
    spec: StrategySpec,
    threshold: f64,
    opts: &RcrOptions,
) -> Result<AggregationResult> {
    let classified = classify_responses(rs, model, threshold, opts)?;
    Ok(combine_classifications(
        rs.m(),
        &classified,
        spec,
        &format!("rcr-agg[{spec}]"),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcrCase {
    /// Exactly one answer classified True.
    SingleTrue,
    /// Several answers classified True; take the most probable.
    MultipleTrue,
    /// None classified True; take the lowest probability of False.
    AllFalse,
}

pub fn acr_case(probabilities: &[f64], threshold: f64) -> AcrCase {
    match probabilities.iter().filter(|&&p| p >= threshold).count() {
        0 => AcrCase::AllFalse,
        1 => AcrCase::SingleTrue,
        _ => AcrCase::MultipleTrue,
    }
}

/// Apply the three-case rule to per-answer probabilities of being correct.
pub fn resolve_answer_classifications(probabilities: &[f64], threshold: f64) -> (usize, bool, AcrCase) {
    let case = acr_case(probabilities, threshold);
    let (chosen, tie) = match case {
        AcrCase::SingleTrue => (probabilities.iter().position(|&p| p >= threshold).unwrap(), false),
        AcrCase::MultipleTrue => {
            let masked: Vec<f64> = probabilities
                .iter()
                .map(|&p| if p >= threshold { p } else { f64::NEG_INFINITY })
                .collect();
            argmax_lowest(&masked)
        }
        AcrCase::AllFalse => {
            let neg_false: Vec<f64> = probabilities.iter().map(|p| -(1.0 - p)).collect();
            argmax_lowest(&neg_false)
        }
    };
    (chosen, tie, case)
}

pub fn acr_aggregate(rs: &ResponseSet, model: &ProbabilisticClassifier, threshold: f64) -> Result<AggregationResult> {
    let probabilities = acr_features_all(rs)
        .iter()
        .map(|f| model.predict_proba(&f.model_row()))
        .collect::<Result<Vec<f64>>>()?;
    let (chosen, tie_broken, _) = resolve_answer_classifications(&probabilities, threshold);
    Ok(AggregationResult {
        method_name: "acr-agg".to_string(),
        chosen,
        scores: probabilities.clone(),
        tie_broken,
        probabilities: Some(probabilities),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classified(entries: &[(usize, f64)]) -> Vec<ClassifiedResponse> {
        entries
            .iter()
            .enumerate()
            .map(|(index, &(vote, p))| ClassifiedResponse {
                index,
                vote,
                probability_true: p,
                label: p >= 0.5,
            })
            .collect()
    }

    fn spec(s: &str) -> StrategySpec {
        s.parse().unwrap()
    }

    #[test]
    fn prop_rule() {
        // a=0 supporters classified (T,T,F); b=1 supporters (T,F,F,F)
        let c = classified(&[(0, 0.9), (0, 0.8), (0, 0.1), (1, 0.7), (1, 0.2), (1, 0.2), (1, 0.3)]);
        let r = combine_classifications(2, &c, spec("prop/avgp"), "x");
        assert_eq!(r.chosen, 0);
        assert!((r.scores[0] - 2.0 / 3.0).abs() < 1e-12 && (r.scores[1] - 0.25).abs() < 1e-12);
        assert!(!r.tie_broken);
    }

    #[test]
    fn measures_disagree() {
        // a: (0.9, 0.1), b: (0.6)
        let c = classified(&[(0, 0.9), (0, 0.1), (1, 0.6)]);
        assert_eq!(combine_classifications(2, &c, spec("wm"), "x").chosen, 0);
        assert_eq!(combine_classifications(2, &c, spec("avgp"), "x").chosen, 1);
        assert_eq!(combine_classifications(2, &c, spec("maxp"), "x").chosen, 0);
    }

    #[test]
    fn maj_with_all_true_is_majority() {
        let c = classified(&[(1, 0.9), (0, 0.8), (1, 0.7), (2, 0.6), (1, 0.55)]);
        for t in ["avgp", "maxp", "wm"] {
            assert_eq!(combine_classifications(3, &c, spec(&format!("maj/{t}")), "x").chosen, 1);
        }
    }

    #[test]
    fn tie_breaker_only_among_tied() {
        // maj: answers 0 and 1 tie with one True each; answer 2 has higher avgp but no True
        let c = classified(&[(0, 0.9), (0, 0.1), (1, 0.6), (2, 0.45), (2, 0.45)]);
        let r = combine_classifications(3, &c, spec("maj/avgp"), "x");
        assert_eq!(r.chosen, 1);
        assert!(r.tie_broken);
        let r = combine_classifications(3, &c, spec("maj/maxp"), "x");
        assert_eq!(r.chosen, 0);
    }

    #[test]
    fn no_true_falls_back_to_tie_breaker() {
        let c = classified(&[(0, 0.1), (1, 0.3), (1, 0.2), (2, 0.4)]);
        let r = combine_classifications(4, &c, spec("prop/maxp"), "x");
        assert_eq!(r.chosen, 2);
        assert!(r.tie_broken);
        assert_eq!(r.scores[3], f64::NEG_INFINITY);
        let r = combine_classifications(4, &c, spec("prop/wm"), "x");
        assert_eq!(r.chosen, 1);
    }

    #[test]
    fn constant_probability_ties() {
        let c = classified(&[(0, 0.7), (1, 0.7), (1, 0.7), (2, 0.7)]);
        let r = combine_classifications(3, &c, spec("wm"), "x");
        assert_eq!((r.chosen, r.tie_broken), (1, false));
        let r = combine_classifications(3, &c, spec("avgp"), "x");
        assert_eq!((r.chosen, r.tie_broken), (0, true));
        let r = combine_classifications(3, &c, spec("prop/avgp"), "x");
        assert!(r.tie_broken);
    }

    #[test]
    fn spec_validation() {
        assert_eq!(default_spec().to_string(), "prop/avgp");
        assert!(StrategySpec::new(Strategy::Wm, Some(Measure::Avgp)).is_err());
        assert!(StrategySpec::new(Strategy::Prop, None).is_err());
        assert!("maj/maj".parse::<StrategySpec>().is_err());
        assert!("prop".parse::<StrategySpec>().is_err());
        assert_eq!(
            StrategySpec::parse("prop", Some("maxp")).unwrap().to_string(),
            "prop/maxp"
        );
        // a CLI default tie-breaker does not invalidate a measure strategy
        assert_eq!(StrategySpec::parse("wm", Some("avgp")).unwrap().to_string(), "wm");
        assert!(StrategySpec::parse("wm/avgp", None).is_err());
        let all = StrategySpec::all();
        assert_eq!(all.len(), 9);
        let json = serde_json::to_string(&default_spec()).unwrap();
        assert_eq!(serde_json::from_str::<StrategySpec>(&json).unwrap(), default_spec());
        assert!(serde_json::from_str::<StrategySpec>(r#"{"strategy":"wm","tie_breaker":"avgp"}"#).is_err());
    }

    #[test]
    fn acr_three_cases() {
        assert_eq!(
            resolve_answer_classifications(&[0.3, 0.7, 0.2], 0.5),
            (1, false, AcrCase::SingleTrue)
        );
        assert_eq!(
            resolve_answer_classifications(&[0.6, 0.9], 0.5),
            (1, false, AcrCase::MultipleTrue)
        );
        assert_eq!(
            resolve_answer_classifications(&[0.1, 0.4, 0.3], 0.5),
            (1, false, AcrCase::AllFalse)
        );
        assert_eq!(
            resolve_answer_classifications(&[0.4, 0.4], 0.5),
            (0, true, AcrCase::AllFalse)
        );
    }
}
