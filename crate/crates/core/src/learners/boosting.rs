//! Gradient-boosted regression trees on the logistic loss.
//!
//! `F = F₀ + Σ trees`, `F₀` = log-odds of the base rate, leaves fitted with
//! Newton steps and shrunk by the learning rate. A round that would raise the
//! training loss has its tree halved until it does not (or dropped).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sigmoid;
use super::tree::{build, BinnedData, Criterion, SampleStats, Tree, TreeParams};
use crate::rng::derive_seed_index;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Row fraction drawn (without replacement) per round.
    pub subsample: f64,
}

impl Default for BoostingParams {
    fn default() -> Self {
        Self {
            rounds: 200,
            learning_rate: 0.1,
            max_depth: 3,
            min_leaf: 5,
            lambda: 1.0,
            subsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub base_score: f64,
    /// Trees with the learning rate already folded into their leaves.
    pub trees: Vec<Tree>,
}

impl BoostedModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }
}

fn log_loss(scores: &[f64], y: &[bool]) -> f64 {
    scores
        .iter()
        .zip(y)
        .map(|(&f, &l)| {
            let z = if l { -f } else { f };
            // log(1 + e^z)
            if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            }
        })
        .sum::<f64>()
        / scores.len() as f64
}

/// Fits the model and returns it with the training log-loss after each round
/// (entry 0 is the loss of the constant model).
pub fn fit_traced(x: &[Vec<f64>], y: &[bool], params: &BoostingParams, seed: u64) -> (BoostedModel, Vec<f64>) {
    let n = x.len();
    let rate = y.iter().filter(|&&l| l).count() as f64 / n as f64;
    let base_score = (rate / (1.0 - rate)).ln();
    let mut scores = vec![base_score; n];
    let mut trace = vec![log_loss(&scores, y)];
    let mut trees = Vec::new();
    if params.learning_rate == 0.0 {
        return (BoostedModel { base_score, trees }, trace);
    }
    let data = BinnedData::new(x);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf as f64,
        features_per_split: None,
        criterion: Criterion::Newton { lambda: params.lambda },
    };
    for round in 0..params.rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_index(seed, round as u64));
        let mut weight = vec![1.0; n];
        if params.subsample < 1.0 {
            for w in &mut weight {
                if rng.random::<f64>() >= params.subsample {
                    *w = 0.0;
                }
            }
        }
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        for i in 0..n {
            if weight[i] == 0.0 {
                continue;
            }
            let p = sigmoid(scores[i]);
            g[i] = p - if y[i] { 1.0 } else { 0.0 };
            h[i] = p * (1.0 - p);
        }
        let mut tree = build(&data, &SampleStats { weight, a: g, b: h }, &tree_params, &mut rng);
        tree.scale_leaves(params.learning_rate);
        let current = *trace.last().unwrap();
        let mut accepted = None;
        for _ in 0..20 {
            let cand: Vec<f64> = scores.iter().zip(x).map(|(s, r)| s + tree.predict(r)).collect();
            let loss = log_loss(&cand, y);
            if loss <= current {
                accepted = Some((cand, loss));
                break;
            }
            tree.scale_leaves(0.5);
        }
        match accepted {
            Some((cand, loss)) => {
                scores = cand;
                trace.push(loss);
                trees.push(tree);
            }
            None => trace.push(current),
        }
    }
    (BoostedModel { base_score, trees }, trace)
}

pub fn fit(x: &[Vec<f64>], y: &[bool], params: &BoostingParams, seed: u64) -> BoostedModel {
    fit_traced(x, y, params, seed).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<bool>) {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 / 10.0 - 3.0).collect();
        (
            xs.iter().map(|&v| vec![v]).collect(),
            xs.iter().map(|&v| v > 0.35).collect(),
        )
    }

    #[test]
    fn zero_rounds_is_base_rate() {
        let (x, y) = data();
        let rate = y.iter().filter(|&&l| l).count() as f64 / y.len() as f64;
        let m = fit(
            &x,
            &y,
            &BoostingParams {
                rounds: 0,
                ..Default::default()
            },
            0,
        );
        for r in &x {
            assert!((m.predict(r) - rate).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_strictly_decreases_on_separable_data() {
        let (x, y) = data();
        let params = BoostingParams {
            rounds: 100,
            learning_rate: 0.1,
            ..Default::default()
        };
        let (_, trace) = fit_traced(&x, &y, &params, 0);
        assert_eq!(trace.len(), 101);
        for w in trace.windows(2) {
            assert!(w[1] < w[0], "{} !< {}", w[1], w[0]);
        }
    }

    #[test]
    fn zero_learning_rate_matches_zero_rounds() {
        let (x, y) = data();
        let a = fit(
            &x,
            &y,
            &BoostingParams {
                learning_rate: 0.0,
                ..Default::default()
            },
            0,
        );
        let b = fit(
            &x,
            &y,
            &BoostingParams {
                rounds: 0,
                ..Default::default()
            },
            0,
        );
        assert_eq!(a, b);
    }
}
