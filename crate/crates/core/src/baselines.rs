//! Rule-based aggregation: majority, confidence-weighted, highest average
//! confidence, surprisingly popular, and its out-group variant.
//!
//! Each rule is a maximization over per-answer criterion values; exact ties
//! resolve to the lowest answer index and set `tie_broken`.

use crate::features::GroupStats;
use crate::model::ResponseSet;
use crate::result::AggregationResult;

pub const MR: &str = "mr";
pub const WC: &str = "wc";
pub const HAC: &str = "hac";
pub const SP: &str = "sp";
pub const SPOG: &str = "spog";

/// Maximizes `S(a)`.
pub fn majority_rule(rs: &ResponseSet) -> AggregationResult {
    let stats = GroupStats::new(rs);
    AggregationResult::from_scores(MR, stats.support.clone())
}

/// Maximizes `S(a) · meanConf(supporters of a)`, i.e. the confidence sum over
/// all respondents. Unsupported answers score 0.
pub fn weighted_confidence(rs: &ResponseSet) -> AggregationResult {
    let stats = GroupStats::new(rs);
    let n = stats.n as f64;
    let scores = stats.conf_by_vote.iter().map(|c| c / n).collect();
    AggregationResult::from_scores(WC, scores)
}

/// Maximizes the mean supporter confidence; unsupported answers are never chosen.
pub fn highest_avg_confidence(rs: &ResponseSet) -> AggregationResult {
    let stats = GroupStats::new(rs);
    let scores = (0..stats.m())
        .map(|a| stats.mean_conf_supporters(a).unwrap_or(f64::NEG_INFINITY))
        .collect();
    AggregationResult::from_scores(HAC, scores)
}

/// Maximizes `S(a) − AvgPS(R_P, a)`.
pub fn surprisingly_popular(rs: &ResponseSet) -> AggregationResult {
    let stats = GroupStats::new(rs);
    let scores = (0..stats.m()).map(|a| stats.sp_margin(a)).collect();
    AggregationResult::from_scores(SP, scores)
}

/// Maximizes `S(a) − AvgPS(non-supporters of a, a)`.
pub fn surprisingly_popular_out_group(rs: &ResponseSet) -> AggregationResult {
    let stats = GroupStats::new(rs);
    let scores = (0..stats.m()).map(|a| stats.sp_out_group_margin(a)).collect();
    AggregationResult::from_scores(SPOG, scores)
}
