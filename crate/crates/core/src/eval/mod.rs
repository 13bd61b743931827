//! Evaluation harness: virtual groups, leave-one-group-out scoring, paired
//! significance tests, feature attribution and report files.

pub mod attribution;
pub mod groups;
pub mod logo;
pub mod report;
pub mod stats;

pub use attribution::{
    kernel_attribution, kernel_attribution_with, log_loss, permutation_importance, permutation_importance_with,
    Attribution, FeatureImportance,
};
pub use groups::{sample_virtual_groups, whole_pools, VirtualGroup, DEFAULT_GROUP_SIZE};
pub use logo::{
    leave_one_group_out, EvalConfig, EvaluationOutcome, EvaluationRun, FoldAudit, LeakageMode, NamedMethod,
};
pub use stats::{mcnemar_exact, mcnemar_p, success_rate, McNemarResult};
