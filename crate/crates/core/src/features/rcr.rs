//! Response-centered features: one 14-dimensional row per response.

use serde::{Deserialize, Serialize};

use super::{chi_square_unchecked, GroupStats};
use crate::error::{Error, Result};
use crate::model::{Response, ResponseSet};

pub const RCR_DIM: usize = 14;

pub const RCR_FEATURE_NAMES: [&str; RCR_DIM] = [
    "ChosenMajAns",
    "Conf",
    "ConfD",
    "ConfD_IG",
    "ConfD_OG",
    "PSv",
    "dPSv",
    "PSvD",
    "PSvD_IG",
    "PSvD_OG",
    "ChiSq",
    "PChiSq",
    "PChiSq_IG",
    "PChiSq_OG",
];

const IG_COLUMNS: [usize; 3] = [3, 8, 12];
const OG_COLUMNS: [usize; 3] = [4, 9, 13];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RcrOptions {
    /// Leave the response itself out of its in-group averages.
    #[serde(default)]
    pub exclude_self_from_in_group: bool,
}

impl RcrOptions {
    /// Features whose missingness flag becomes an extra model column.
    pub fn masked_columns(&self) -> Vec<usize> {
        if self.exclude_self_from_in_group {
            IG_COLUMNS.iter().chain(&OG_COLUMNS).copied().collect()
        } else {
            OG_COLUMNS.to_vec()
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        RCR_FEATURE_NAMES
            .iter()
            .map(|s| s.to_string())
            .chain(
                self.masked_columns()
                    .into_iter()
                    .map(|c| format!("{}_missing", RCR_FEATURE_NAMES[c])),
            )
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcrFeatures {
    pub chosen_maj_ans: f64,
    pub conf: f64,
    pub conf_d: f64,
    pub conf_d_ig: f64,
    pub conf_d_og: f64,
    pub psv: f64,
    pub d_psv: f64,
    pub psv_d: f64,
    pub psv_d_ig: f64,
    pub psv_d_og: f64,
    pub chi_sq: f64,
    pub p_chi_sq: f64,
    pub p_chi_sq_ig: f64,
    pub p_chi_sq_og: f64,
    /// Set where a feature holds the 0 sentinel because its subset was empty.
    pub missing: [bool; RCR_DIM],
}

impl RcrFeatures {
    pub fn values(&self) -> [f64; RCR_DIM] {
        [
            self.chosen_maj_ans,
            self.conf,
            self.conf_d,
            self.conf_d_ig,
            self.conf_d_og,
            self.psv,
            self.d_psv,
            self.psv_d,
            self.psv_d_ig,
            self.psv_d_og,
            self.chi_sq,
            self.p_chi_sq,
            self.p_chi_sq_ig,
            self.p_chi_sq_og,
        ]
    }

    /// Feature values followed by the mask columns selected by `opts`.
    pub fn model_row(&self, opts: &RcrOptions) -> Vec<f64> {
        let mut row = self.values().to_vec();
        row.extend(
            opts.masked_columns()
                .into_iter()
                .map(|c| if self.missing[c] { 1.0 } else { 0.0 }),
        );
        row
    }
}

/// Features of response `r`, which must belong to `rs`.
pub fn rcr_features(r: &Response, rs: &ResponseSet, opts: &RcrOptions) -> Result<RcrFeatures> {
    let idx = rs
        .responses()
        .iter()
        .position(|x| x == r)
        .ok_or(Error::ResponseNotInSet)?;
    let stats = GroupStats::new(rs);
    Ok(features_at(&stats, rs, idx, opts))
}

/// Features of every response in `rs`, in response order.
pub fn rcr_features_all(rs: &ResponseSet, opts: &RcrOptions) -> Vec<RcrFeatures> {
    let stats = GroupStats::new(rs);
    (0..rs.len()).map(|i| features_at(&stats, rs, i, opts)).collect()
}

struct Subset {
    size: usize,
    conf_sum: f64,
    ps_sum: Vec<f64>,
}

impl Subset {
    fn mean_conf(&self) -> f64 {
        self.conf_sum / self.size as f64
    }

    fn mean_ps(&self) -> Vec<f64> {
        self.ps_sum.iter().map(|s| s / self.size as f64).collect()
    }
}

fn features_at(stats: &GroupStats, rs: &ResponseSet, idx: usize, opts: &RcrOptions) -> RcrFeatures {
    let r = &rs.responses()[idx];
    let v = r.vote;
    let ps = &r.predicted_support;
    let psv = ps[v];

    let mut in_group = Subset {
        size: stats.counts[v],
        conf_sum: stats.conf_by_vote[v],
        ps_sum: stats.ps_by_vote[v].clone(),
    };
    if opts.exclude_self_from_in_group {
        in_group.size -= 1;
        in_group.conf_sum -= r.confidence;
        in_group.ps_sum.iter_mut().zip(ps).for_each(|(s, p)| *s -= p);
    }
    let out_group = Subset {
        size: stats.n - stats.counts[v],
        conf_sum: stats.conf_total - stats.conf_by_vote[v],
        ps_sum: stats
            .ps_total
            .iter()
            .zip(&stats.ps_by_vote[v])
            .map(|(t, s)| t - s)
            .collect(),
    };

    let mut missing = [false; RCR_DIM];
    let mut relative = |subset: &Subset, cols: [usize; 3]| -> [f64; 3] {
        if subset.size == 0 {
            cols.iter().for_each(|&c| missing[c] = true);
            return [0.0; 3];
        }
        let mean_ps = subset.mean_ps();
        [
            r.confidence - subset.mean_conf(),
            psv - mean_ps[v],
            chi_square_unchecked(ps, &mean_ps),
        ]
    };
    let [conf_d_ig, psv_d_ig, p_chi_sq_ig] = relative(&in_group, IG_COLUMNS);
    let [conf_d_og, psv_d_og, p_chi_sq_og] = relative(&out_group, OG_COLUMNS);

    let mean_ps_all: Vec<f64> = (0..stats.m()).map(|i| stats.avg_ps_all(i)).collect();

    RcrFeatures {
        chosen_maj_ans: if stats.is_majority(v) { 1.0 } else { 0.0 },
        conf: r.confidence,
        conf_d: r.confidence - stats.conf_total / stats.n as f64,
        conf_d_ig,
        conf_d_og,
        psv,
        d_psv: stats.support[v] - psv,
        psv_d: psv - mean_ps_all[v],
        psv_d_ig,
        psv_d_og,
        chi_sq: chi_square_unchecked(ps, &stats.support),
        p_chi_sq: chi_square_unchecked(ps, &mean_ps_all),
        p_chi_sq_ig,
        p_chi_sq_og,
        missing,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledResponseRow {
    pub features: RcrFeatures,
    /// True iff the response voted for the correct answer.
    pub label: bool,
    pub group_id: String,
    pub problem_id: String,
}

/// One labeled row per response of every group.
pub fn rcr_dataset<'a, I>(groups: I, opts: &RcrOptions) -> Result<Vec<LabeledResponseRow>>
where
    I: IntoIterator<Item = (&'a str, &'a ResponseSet)>,
{
    let mut rows = Vec::new();
    for (group_id, rs) in groups {
        let correct = rs.answer_set().correct_index.ok_or_else(|| Error::MissingGroundTruth {
            problem_id: rs.problem_id().to_string(),
        })?;
        for (r, features) in rs.responses().iter().zip(rcr_features_all(rs, opts)) {
            rows.push(LabeledResponseRow {
                features,
                label: r.vote == correct,
                group_id: group_id.to_string(),
                problem_id: rs.problem_id().to_string(),
            });
        }
    }
    Ok(rows)
}
