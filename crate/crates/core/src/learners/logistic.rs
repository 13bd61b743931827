//! L2-regularized logistic regression fitted by damped Newton iterations.
//!
//! The objective is the *mean* log-loss plus `l2/2 · |w|²` (intercept not
//! penalized), so duplicating every row leaves the optimum unchanged.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub l2: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1.0,
            tolerance: 1e-9,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl LogisticModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Packed parameters: `[w_0 .. w_{d-1}, b]`.
pub fn objective(x: &[Vec<f64>], y: &[bool], l2: f64, params: &[f64]) -> f64 {
    let d = params.len() - 1;
    let n = x.len() as f64;
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let z = params[d] + row.iter().zip(params).map(|(a, b)| a * b).sum::<f64>();
            softplus(z) - if label { z } else { 0.0 }
        })
        .sum::<f64>()
        / n;
    loss + 0.5 * l2 * params[..d].iter().map(|w| w * w).sum::<f64>()
}

pub fn gradient(x: &[Vec<f64>], y: &[bool], l2: f64, params: &[f64]) -> Vec<f64> {
    let d = params.len() - 1;
    let n = x.len() as f64;
    let mut g = vec![0.0; d + 1];
    for (row, &label) in x.iter().zip(y) {
        let z = params[d] + row.iter().zip(params).map(|(a, b)| a * b).sum::<f64>();
        let r = sigmoid(z) - if label { 1.0 } else { 0.0 };
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    g.iter_mut().for_each(|v| *v /= n);
    for j in 0..d {
        g[j] += l2 * params[j];
    }
    g
}

fn hessian(x: &[Vec<f64>], l2: f64, params: &[f64]) -> DMatrix<f64> {
    let d = params.len() - 1;
    let n = x.len() as f64;
    let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
    let mut aug = vec![0.0; d + 1];
    for row in x {
        let z = params[d] + row.iter().zip(params).map(|(a, b)| a * b).sum::<f64>();
        let p = sigmoid(z);
        let s = p * (1.0 - p) / n;
        aug[..d].copy_from_slice(row);
        aug[d] = 1.0;
        for i in 0..=d {
            let si = s * aug[i];
            if si == 0.0 {
                continue;
            }
            for j in i..=d {
                h[(i, j)] += si * aug[j];
            }
        }
    }
    for i in 0..=d {
        for j in 0..i {
            h[(i, j)] = h[(j, i)];
        }
    }
    for i in 0..d {
        h[(i, i)] += l2;
    }
    h
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn fit(x: &[Vec<f64>], y: &[bool], params: &LogisticParams) -> LogisticModel {
    let d = x[0].len();
    let mut theta = vec![0.0; d + 1];
    let rate = y.iter().filter(|&&l| l).count() as f64 / y.len() as f64;
    theta[d] = (rate / (1.0 - rate)).ln();
    let mut f = objective(x, y, params.l2, &theta);
    let mut g = gradient(x, y, params.l2, &theta);
    let mut iterations = 0;
    let mut damping = 0.0;
    while norm(&g) > params.tolerance && iterations < params.max_iter {
        iterations += 1;
        let mut h = hessian(x, params.l2, &theta);
        let scale = (0..=d).map(|i| h[(i, i)]).fold(0.0, f64::max).max(1e-12);
        for i in 0..=d {
            h[(i, i)] += damping * scale;
        }
        let step = match h.clone().cholesky() {
            Some(c) => c.solve(&DVector::from_column_slice(&g)),
            None => {
                damping = if damping == 0.0 { 1e-10 } else { damping * 10.0 };
                continue;
            }
        };
        let decrement: f64 = step.iter().zip(&g).map(|(s, gi)| s * gi).sum();
        let mut t = 1.0;
        let mut accepted = false;
        let f_prev = f;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let fc = objective(x, y, params.l2, &cand);
            if fc <= f - 1e-4 * t * decrement || (fc <= f && t < 1e-6) {
                theta = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        let new_g = gradient(x, y, params.l2, &theta);
        if !accepted || f_prev - f <= f64::EPSILON * f.abs() {
            // no measurable descent along the Newton direction: the gradient
            // is at the resolution limit of the objective
            g = new_g;
            break;
        }
        g = new_g;
        damping = 0.0;
    }
    LogisticModel {
        weights: theta[..d].to_vec(),
        intercept: theta[d],
        iterations,
        gradient_norm: norm(&g),
    }
}
