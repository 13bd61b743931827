use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature z-scoring fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviations; 0 marks a constant column.
    pub scales: Vec<f64>,
}

const ZERO_VARIANCE: f64 = 1e-12;

impl Standardizer {
    pub fn identity(d: usize) -> Self {
        Self {
            means: vec![0.0; d],
            scales: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect()
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

pub fn fit_standardizer(rows: &[Vec<f64>]) -> Result<Standardizer> {
    let first = rows.first().ok_or(Error::EmptyMatrix)?;
    let d = first.len();
    let n = rows.len() as f64;
    let mut means = vec![0.0; d];
    for r in rows {
        if r.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        means.iter_mut().zip(r).for_each(|(m, x)| *m += x);
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; d];
    for r in rows {
        vars.iter_mut()
            .zip(r.iter().zip(&means))
            .for_each(|(v, (x, m))| *v += (x - m) * (x - m));
    }
    let scales = vars
        .into_iter()
        .zip(&means)
        .map(|(v, m)| {
            let s = (v / n).sqrt();
            if s <= ZERO_VARIANCE * m.abs().max(1.0) {
                0.0
            } else {
                s
            }
        })
        .collect();
    Ok(Standardizer { means, scales })
}
