//! Two-class linear discriminant analysis with a shared covariance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Ridge added to the pooled covariance; 0 when it was already invertible.
    pub jitter: f64,
}

impl LdaModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>())
    }
}

/// Relative pivot size below which the covariance is treated as singular.
const CONDITION_FLOOR: f64 = 1e-10;

pub fn fit(x: &[Vec<f64>], y: &[bool]) -> LdaModel {
    let d = x[0].len();
    let n = x.len();
    let mut mu = [DVector::<f64>::zeros(d), DVector::<f64>::zeros(d)];
    let mut counts = [0usize; 2];
    for (row, &label) in x.iter().zip(y) {
        let c = usize::from(label);
        counts[c] += 1;
        for j in 0..d {
            mu[c][j] += row[j];
        }
    }
    for c in 0..2 {
        mu[c] /= counts[c] as f64;
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for (row, &label) in x.iter().zip(y) {
        let m = &mu[usize::from(label)];
        let diff: Vec<f64> = (0..d).map(|j| row[j] - m[j]).collect();
        for i in 0..d {
            if diff[i] == 0.0 {
                continue;
            }
            for j in i..d {
                cov[(i, j)] += diff[i] * diff[j];
            }
        }
    }
    let dof = if n > 2 { (n - 2) as f64 } else { n as f64 };
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= dof;
            cov[(j, i)] = cov[(i, j)];
        }
    }

    let trace = cov.trace();
    let base = if trace > 0.0 { 1e-6 * trace / d as f64 } else { 1e-6 };
    let mut jitter = 0.0;
    let chol = loop {
        let mut a = cov.clone();
        for i in 0..d {
            a[(i, i)] += jitter;
        }
        let max_diag = (0..d).map(|i| a[(i, i)]).fold(0.0, f64::max);
        if let Some(c) = a.cholesky() {
            let l = c.l();
            let min_pivot = (0..d).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if min_pivot > CONDITION_FLOOR * max_diag.max(f64::MIN_POSITIVE) {
                break c;
            }
        }
        jitter = if jitter == 0.0 { base } else { jitter * 10.0 };
    };

    let delta = &mu[1] - &mu[0];
    let w = chol.solve(&delta);
    let midpoint = (&mu[1] + &mu[0]) * 0.5;
    let intercept = -w.dot(&midpoint) + (counts[1] as f64 / counts[0] as f64).ln();
    LdaModel {
        weights: w.iter().copied().collect(),
        intercept,
        jitter,
    }
}
