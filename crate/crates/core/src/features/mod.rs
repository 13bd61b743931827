//! Meta-cognitive feature engineering.
//!
//! Two representations are built from a [`ResponseSet`]: one row per
//! response ([`rcr`]) and one row per candidate answer ([`acr`]). Both draw
//! on the same per-group tallies in [`GroupStats`], so the quantities the
//! rule baselines use (support, average predicted support) come from a
//! single code path.

pub mod acr;
pub mod rcr;

use crate::error::{Error, Result};
use crate::model::ResponseSet;

pub use acr::{acr_dataset, acr_features, AcrFeatures, AcrOptions, LabeledAnswerRow, ACR_FEATURE_NAMES};
pub use rcr::{rcr_dataset, rcr_features, LabeledResponseRow, RcrFeatures, RcrOptions, RCR_FEATURE_NAMES};

/// Symmetric chi-square distance `½ Σ (p_i − q_i)² / (p_i + q_i)`.
///
/// Coordinates where both entries are zero contribute nothing.
pub fn chi_square_score(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(chi_square_unchecked(p, q))
}

pub(crate) fn chi_square_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let total: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let denom = a + b;
            if denom > 0.0 {
                (a - b) * (a - b) / denom
            } else {
                0.0
            }
        })
        .sum();
    0.5 * total
}

/// Sums over one response set, split by voted answer.
#[derive(Debug, Clone)]
pub(crate) struct GroupStats {
    pub n: usize,
    pub counts: Vec<usize>,
    pub support: Vec<f64>,
    pub conf_total: f64,
    pub conf_by_vote: Vec<f64>,
    /// `ps_total[i]` = Σ over all responses of `ps[i]`.
    pub ps_total: Vec<f64>,
    /// `ps_by_vote[v][i]` = Σ over responses voting `v` of `ps[i]`.
    pub ps_by_vote: Vec<Vec<f64>>,
    pub max_count: usize,
}

impl GroupStats {
    pub fn new(rs: &ResponseSet) -> Self {
        let m = rs.m();
        let mut counts = vec![0usize; m];
        let mut conf_by_vote = vec![0.0; m];
        let mut ps_by_vote = vec![vec![0.0; m]; m];
        let mut ps_total = vec![0.0; m];
        let mut conf_total = 0.0;
        for r in rs.responses() {
            counts[r.vote] += 1;
            conf_by_vote[r.vote] += r.confidence;
            conf_total += r.confidence;
            for (i, &p) in r.predicted_support.iter().enumerate() {
                ps_by_vote[r.vote][i] += p;
                ps_total[i] += p;
            }
        }
        let n = rs.len();
        let support = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let max_count = counts.iter().copied().max().unwrap_or(0);
        Self {
            n,
            counts,
            support,
            conf_total,
            conf_by_vote,
            ps_total,
            ps_by_vote,
            max_count,
        }
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn is_majority(&self, a: usize) -> bool {
        self.counts[a] == self.max_count
    }

    /// `AvgPS(R_P, a)`.
    pub fn avg_ps_all(&self, a: usize) -> f64 {
        self.ps_total[a] / self.n as f64
    }

    /// Average prediction for `a` among its supporters.
    pub fn avg_ps_supporters(&self, a: usize) -> Option<f64> {
        let c = self.counts[a];
        (c > 0).then(|| self.ps_by_vote[a][a] / c as f64)
    }

    /// Average prediction for `a` among those who voted otherwise.
    pub fn avg_ps_non_supporters(&self, a: usize) -> Option<f64> {
        let c = self.n - self.counts[a];
        (c > 0).then(|| (self.ps_total[a] - self.ps_by_vote[a][a]) / c as f64)
    }

    /// Surprisingly-popular margin `S(a) − AvgPS(R_P, a)`.
    pub fn sp_margin(&self, a: usize) -> f64 {
        self.support[a] - self.avg_ps_all(a)
    }

    /// Out-group surprisingly-popular margin `S(a) − AvgPS(non-supporters, a)`,
    /// with the empty non-supporter average taken as 0.
    pub fn sp_out_group_margin(&self, a: usize) -> f64 {
        self.support[a] - self.avg_ps_non_supporters(a).unwrap_or(0.0)
    }

    pub fn mean_conf_supporters(&self, a: usize) -> Option<f64> {
        let c = self.counts[a];
        (c > 0).then(|| self.conf_by_vote[a] / c as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_examples() {
        assert_eq!(chi_square_score(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        let v = chi_square_score(&[0.5, 0.5], &[0.7, 0.3]).unwrap();
        assert!((v - 0.5 * (0.04 / 1.2 + 0.04 / 0.8)).abs() < 1e-12);
        assert!((v - 0.0416667).abs() < 1e-6);
        assert!((chi_square_score(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_degenerate_terms() {
        assert_eq!(chi_square_score(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            chi_square_score(&[0.5, 0.5], &[1.0]),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
    }
}
