//! Model-agnostic feature attribution.
//!
//! Permutation importance measures how much the log-loss degrades when one
//! column is shuffled. Kernel attribution approximates Shapley values with a
//! weighted least-squares fit over feature coalitions, imputing absent
//! features from background rows.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TrainingMatrix;
use crate::error::{Error, Result};
use crate::learners::ProbabilisticClassifier;
use crate::rng::derive_seed_index;

const LOSS_CLIP: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub index: usize,
    /// Mean log-loss increase over the shuffles.
    pub importance: f64,
    /// Sample standard deviation of the increase (0 for a single shuffle).
    pub std: f64,
}

pub fn log_loss(probabilities: &[f64], labels: &[bool]) -> f64 {
    probabilities
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(LOSS_CLIP, 1.0 - LOSS_CLIP);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / probabilities.len() as f64
}

/// Permutation importance for any probability predictor, sorted by
/// decreasing importance (ties by column index).
pub fn permutation_importance_with<F>(
    predict: F,
    rows: &[Vec<f64>],
    labels: &[bool],
    names: &[String],
    repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureImportance>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if repeats == 0 {
        return Err(Error::InvalidRepeatCount);
    }
    if rows.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: rows.len(),
            right: labels.len(),
        });
    }
    let d = names.len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: r.len(),
        });
    }
    let score = |x: &[Vec<f64>]| log_loss(&x.iter().map(|r| predict(r)).collect::<Vec<_>>(), labels);
    let base = score(rows);
    let mut out: Vec<FeatureImportance> = (0..d)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_index(seed, j as u64));
            let mut shuffled = rows.to_vec();
            let mut column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let deltas: Vec<f64> = (0..repeats)
                .map(|_| {
                    column.shuffle(&mut rng);
                    shuffled.iter_mut().zip(&column).for_each(|(r, &v)| r[j] = v);
                    score(&shuffled) - base
                })
                .collect();
            let mean = deltas.iter().sum::<f64>() / repeats as f64;
            let std = if repeats > 1 {
                (deltas.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt()
            } else {
                0.0
            };
            FeatureImportance {
                feature: names[j].clone(),
                index: j,
                importance: mean,
                std,
            }
        })
        .collect();
    out.sort_by(|a, b| b.importance.total_cmp(&a.importance).then(a.index.cmp(&b.index)));
    Ok(out)
}

/// Permutation importance of a fitted classifier on a labeled matrix.
pub fn permutation_importance(
    model: &ProbabilisticClassifier,
    matrix: &TrainingMatrix,
    repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureImportance>> {
    if matrix.n_features() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: matrix.n_features(),
        });
    }
    permutation_importance_with(
        |r| model.predict_proba(r).expect("dimension checked"),
        &matrix.rows,
        &matrix.labels,
        &matrix.feature_names,
        repeats,
        seed,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// Mean model output over the background rows.
    pub base_value: f64,
    /// Model output at the instance.
    pub prediction: f64,
    /// One signed value per feature; they sum to `prediction - base_value`.
    pub values: Vec<f64>,
    /// Distinct coalitions evaluated.
    pub coalitions: usize,
    /// All coalitions were enumerated, making the values exact Shapley values.
    pub exact: bool,
}

fn kernel_weight(d: usize, s: usize) -> f64 {
    // (d-1) / (C(d,s) s (d-s))
    let ln_c = statrs::function::factorial::ln_binomial(d as u64, s as u64);
    (d - 1) as f64 / (ln_c.exp() * s as f64 * (d - s) as f64)
}

/// Kernel-weighted Shapley approximation for one instance.
///
/// Exhaustive enumeration is used when `2^d - 2 <= coalitions`; otherwise
/// `coalitions` subsets are drawn from the Shapley kernel's size distribution
/// in complementary pairs. The efficiency constraint is imposed exactly by
/// eliminating the last feature from the regression.
pub fn kernel_attribution_with<F>(
    predict: F,
    instance: &[f64],
    background: &[Vec<f64>],
    coalitions: usize,
    seed: u64,
) -> Result<Attribution>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if background.is_empty() {
        return Err(Error::EmptyBackground);
    }
    let d = instance.len();
    if let Some(b) = background.iter().find(|b| b.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: b.len(),
        });
    }
    let base_value = background.iter().map(|b| predict(b)).sum::<f64>() / background.len() as f64;
    let prediction = predict(instance);
    let delta = prediction - base_value;
    if d <= 1 {
        return Ok(Attribution {
            base_value,
            prediction,
            values: vec![delta; d],
            coalitions: 0,
            exact: true,
        });
    }

    let exhaustive = d < 63 && (1u64 << d) - 2 <= coalitions as u64;
    let mut masks: Vec<(Vec<bool>, f64)> = Vec::new();
    if exhaustive {
        for bits in 1..(1u64 << d) - 1 {
            let z: Vec<bool> = (0..d).map(|i| bits >> i & 1 == 1).collect();
            let s = z.iter().filter(|&&b| b).count();
            masks.push((z, kernel_weight(d, s)));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size_w: Vec<f64> = (1..d).map(|s| 1.0 / (s * (d - s)) as f64).collect();
        let total: f64 = size_w.iter().sum();
        let mut order: Vec<usize> = (0..d).collect();
        for _ in 0..coalitions.div_ceil(2).max(1) {
            let mut u = rng.random::<f64>() * total;
            let mut s = d - 1;
            for (i, w) in size_w.iter().enumerate() {
                if u < *w {
                    s = i + 1;
                    break;
                }
                u -= w;
            }
            order.shuffle(&mut rng);
            let mut z = vec![false; d];
            order[..s].iter().for_each(|&i| z[i] = true);
            let complement = z.iter().map(|b| !b).collect();
            masks.push((z, 1.0));
            masks.push((complement, 1.0));
        }
    }

    let values_z: Vec<f64> = masks
        .par_iter()
        .map(|(z, _)| {
            let mut row = vec![0.0; d];
            background
                .iter()
                .map(|b| {
                    for i in 0..d {
                        row[i] = if z[i] { instance[i] } else { b[i] };
                    }
                    predict(&row)
                })
                .sum::<f64>()
                / background.len() as f64
        })
        .collect();

    let k = d - 1;
    let mut xtwx = DMatrix::<f64>::zeros(k, k);
    let mut xtwy = DVector::<f64>::zeros(k);
    for ((z, w), v) in masks.iter().zip(&values_z) {
        let zd = f64::from(u8::from(z[k]));
        let x: Vec<f64> = (0..k).map(|i| f64::from(u8::from(z[i])) - zd).collect();
        let y = v - base_value - zd * delta;
        for i in 0..k {
            xtwy[i] += w * x[i] * y;
            for j in 0..k {
                xtwx[(i, j)] += w * x[i] * x[j];
            }
        }
    }
    let phi = xtwx
        .svd(true, true)
        .solve(&xtwy, 1e-12)
        .map_err(|e| Error::InvalidConfig(format!("attribution solve failed: {e}")))?;
    let mut values: Vec<f64> = phi.iter().copied().collect();
    values.push(delta - values.iter().sum::<f64>());
    Ok(Attribution {
        base_value,
        prediction,
        values,
        coalitions: masks.len(),
        exact: exhaustive,
    })
}

pub fn kernel_attribution(
    model: &ProbabilisticClassifier,
    instance: &[f64],
    background: &[Vec<f64>],
    coalitions: usize,
    seed: u64,
) -> Result<Attribution> {
    if instance.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: instance.len(),
        });
    }
    kernel_attribution_with(
        |r| model.predict_proba(r).expect("dimension checked"),
        instance,
        background,
        coalitions,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(w: &[f64]) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
        move |x| x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + 0.5
    }

    #[test]
    fn linear_model_recovers_weighted_offsets() {
        let w = [0.3, -1.2, 0.0, 2.0, 0.7, -0.1];
        let bg = vec![
            vec![0.0, 1.0, 3.0, -1.0, 0.5, 0.0],
            vec![2.0, -1.0, 1.0, 1.0, -0.5, 4.0],
        ];
        let x = [1.5, 0.5, -4.0, 2.0, 1.0, 1.0];
        let means = [1.0, 0.0, 2.0, 0.0, 0.0, 2.0];
        for (coalitions, exact) in [(62, true), (40, false)] {
            let a = kernel_attribution_with(linear(&w), &x, &bg, coalitions, 3).unwrap();
            assert_eq!(a.exact, exact);
            for i in 0..6 {
                assert!((a.values[i] - w[i] * (x[i] - means[i])).abs() < 1e-9, "{:?}", a.values);
            }
        }
    }

    #[test]
    fn interaction_split_evenly() {
        // f = x0 * x1 with zero background: Shapley gives each half the product
        let f = |x: &[f64]| x[0] * x[1];
        let a = kernel_attribution_with(f, &[2.0, 3.0], &[vec![0.0, 0.0]], 10, 0).unwrap();
        assert!(a.exact);
        assert!((a.values[0] - 3.0).abs() < 1e-12 && (a.values[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let f = |x: &[f64]| x[0].tanh();
        let a = kernel_attribution_with(f, &[1.0], &[vec![0.0]], 10, 0).unwrap();
        assert!((a.values[0] - 1f64.tanh()).abs() < 1e-15);
        assert!(matches!(
            kernel_attribution_with(f, &[1.0], &[], 10, 0),
            Err(Error::EmptyBackground)
        ));
        let names = vec!["a".to_string()];
        assert!(matches!(
            permutation_importance_with(f, &[vec![1.0]], &[true], &names, 0, 0),
            Err(Error::InvalidRepeatCount)
        ));
    }

    #[test]
    fn label_column_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![f64::from(i % 2), rng.random::<f64>()]).collect();
        let labels: Vec<bool> = rows.iter().map(|r| r[0] == 1.0).collect();
        let names = vec!["signal".to_string(), "noise".to_string()];
        let f = |x: &[f64]| 0.1 + 0.8 * x[0];
        let imp = permutation_importance_with(f, &rows, &labels, &names, 10, 7).unwrap();
        assert_eq!(imp[0].feature, "signal");
        assert!(imp[1].importance.abs() < 1e-12);
    }
}
