//! Answer-centered features: one 10-dimensional row per candidate answer.

use serde::{Deserialize, Serialize};

use super::{chi_square_unchecked, GroupStats};
use crate::error::{Error, Result};
use crate::model::ResponseSet;

pub const ACR_DIM: usize = 10;

pub const ACR_FEATURE_NAMES: [&str; ACR_DIM] = [
    "IsMajority",
    "Support",
    "AvgPS",
    "AvgPS_IG",
    "AvgPS_OG",
    "dPS",
    "dPS_IG",
    "dPS_OG",
    "AvgChiSq",
    "AvgConf",
];

const SUPPORTER_COLUMNS: [usize; 4] = [3, 6, 8, 9];
const NON_SUPPORTER_COLUMNS: [usize; 2] = [4, 7];
const MASKED_COLUMNS: [usize; 6] = [3, 4, 6, 7, 8, 9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcrOptions {
    /// Keep answers nobody voted for as training instances.
    pub include_zero_support: bool,
}

impl Default for AcrOptions {
    fn default() -> Self {
        Self {
            include_zero_support: true,
        }
    }
}

impl AcrOptions {
    pub fn column_names(&self) -> Vec<String> {
        ACR_FEATURE_NAMES
            .iter()
            .map(|s| s.to_string())
            .chain(
                MASKED_COLUMNS
                    .iter()
                    .map(|&c| format!("{}_missing", ACR_FEATURE_NAMES[c])),
            )
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcrFeatures {
    pub is_majority: f64,
    pub support: f64,
    pub avg_ps: f64,
    pub avg_ps_ig: f64,
    pub avg_ps_og: f64,
    pub d_ps: f64,
    pub d_ps_ig: f64,
    pub d_ps_og: f64,
    pub avg_chi_sq: f64,
    pub avg_conf: f64,
    pub missing: [bool; ACR_DIM],
}

impl AcrFeatures {
    pub fn values(&self) -> [f64; ACR_DIM] {
        [
            self.is_majority,
            self.support,
            self.avg_ps,
            self.avg_ps_ig,
            self.avg_ps_og,
            self.d_ps,
            self.d_ps_ig,
            self.d_ps_og,
            self.avg_chi_sq,
            self.avg_conf,
        ]
    }

    pub fn model_row(&self) -> Vec<f64> {
        let mut row = self.values().to_vec();
        row.extend(MASKED_COLUMNS.iter().map(|&c| if self.missing[c] { 1.0 } else { 0.0 }));
        row
    }
}

pub fn acr_features(a: usize, rs: &ResponseSet) -> Result<AcrFeatures> {
    if a >= rs.m() {
        return Err(Error::IndexOutOfRange { index: a, m: rs.m() });
    }
    Ok(acr_features_all(rs).swap_remove(a))
}

/// Features of every answer `0..m` of `rs`.
pub fn acr_features_all(rs: &ResponseSet) -> Vec<AcrFeatures> {
    let stats = GroupStats::new(rs);
    let mut chi_sum = vec![0.0; rs.m()];
    for r in rs.responses() {
        chi_sum[r.vote] += chi_square_unchecked(&r.predicted_support, &stats.support);
    }
    (0..rs.m()).map(|a| features_for(&stats, &chi_sum, a)).collect()
}

fn features_for(stats: &GroupStats, chi_sum: &[f64], a: usize) -> AcrFeatures {
    let support = stats.support[a];
    let mut missing = [false; ACR_DIM];
    let (avg_ps_ig, d_ps_ig, avg_chi_sq, avg_conf) = match stats.avg_ps_supporters(a) {
        Some(avg) => {
            let count = stats.counts[a] as f64;
            (avg, support - avg, chi_sum[a] / count, stats.conf_by_vote[a] / count)
        }
        None => {
            SUPPORTER_COLUMNS.iter().for_each(|&c| missing[c] = true);
            (0.0, 0.0, 0.0, 0.0)
        }
    };
    let (avg_ps_og, d_ps_og) = match stats.avg_ps_non_supporters(a) {
        Some(avg) => (avg, support - avg),
        None => {
            NON_SUPPORTER_COLUMNS.iter().for_each(|&c| missing[c] = true);
            (0.0, 0.0)
        }
    };
    AcrFeatures {
        is_majority: if stats.is_majority(a) { 1.0 } else { 0.0 },
        support,
        avg_ps: stats.avg_ps_all(a),
        avg_ps_ig,
        avg_ps_og,
        d_ps: stats.sp_margin(a),
        d_ps_ig,
        d_ps_og,
        avg_chi_sq,
        avg_conf,
        missing,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledAnswerRow {
    pub features: AcrFeatures,
    /// True iff this is the correct answer.
    pub label: bool,
    pub group_id: String,
    pub problem_id: String,
    pub answer_index: usize,
}

/// One labeled row per answer of every group.
pub fn acr_dataset<'a, I>(groups: I, opts: &AcrOptions) -> Result<Vec<LabeledAnswerRow>>
where
    I: IntoIterator<Item = (&'a str, &'a ResponseSet)>,
{
    let mut rows = Vec::new();
    for (group_id, rs) in groups {
        let correct = rs.answer_set().correct_index.ok_or_else(|| Error::MissingGroundTruth {
            problem_id: rs.problem_id().to_string(),
        })?;
        for (a, features) in acr_features_all(rs).into_iter().enumerate() {
            if !opts.include_zero_support && features.support == 0.0 {
                continue;
            }
            rows.push(LabeledAnswerRow {
                features,
                label: a == correct,
                group_id: group_id.to_string(),
                problem_id: rs.problem_id().to_string(),
                answer_index: a,
            });
        }
    }
    Ok(rows)
}
