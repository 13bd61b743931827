use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::groups::VirtualGroup;
use crate::dataset::{Representation, TrainingMatrix};
use crate::error::{Error, Result};
use crate::features::{acr_dataset, rcr_dataset, AcrOptions, LabeledAnswerRow, LabeledResponseRow, RcrOptions};
use crate::learners::{LearnerConfig, LearnerRegistry, ProbabilisticClassifier};
use crate::methods::AggregationMethod;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeakageMode {
    /// Train only on groups drawn from other problems.
    #[default]
    ExcludeSameProblem,
    /// Train on every other group, including overlapping samples of the same problem.
    ExcludeGroupOnly,
}

impl FromStr for LeakageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclude-same-problem" => Ok(Self::ExcludeSameProblem),
            "exclude-group-only" => Ok(Self::ExcludeGroupOnly),
            other => Err(Error::InvalidConfig(format!("unknown leakage mode `{other}`"))),
        }
    }
}

impl fmt::Display for LeakageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ExcludeSameProblem => "exclude-same-problem",
            Self::ExcludeGroupOnly => "exclude-group-only",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationOutcome {
    pub group_id: String,
    pub problem_id: String,
    pub method_name: String,
    pub chosen: usize,
    pub correct_index: usize,
    pub correct: bool,
    pub tie_broken: bool,
}

/// A method under a report label; the same method type may appear several
/// times with different settings (e.g. a strategy grid).
#[derive(Clone)]
pub struct NamedMethod {
    pub label: String,
    pub method: Arc<dyn AggregationMethod>,
}

impl NamedMethod {
    pub fn new(method: Arc<dyn AggregationMethod>) -> Self {
        Self {
            label: method.name(),
            method,
        }
    }

    pub fn labeled(label: impl Into<String>, method: Arc<dyn AggregationMethod>) -> Self {
        Self {
            label: label.into(),
            method,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub leakage_mode: LeakageMode,
    pub learner: String,
    pub learners: LearnerConfig,
    pub rcr: RcrOptions,
    pub acr: AcrOptions,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            leakage_mode: LeakageMode::default(),
            learner: "ensemble".into(),
            learners: LearnerConfig::default(),
            rcr: RcrOptions::default(),
            acr: AcrOptions::default(),
            seed: 0,
        }
    }
}

/// What one fold trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub held_out: Vec<String>,
    pub training_groups: usize,
    pub rcr_rows: usize,
    pub acr_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRun {
    /// Sorted by method (in the order given) then group id.
    pub outcomes: Vec<EvaluationOutcome>,
    pub folds: Vec<FoldAudit>,
}

impl EvaluationRun {
    pub fn for_method(&self, label: &str) -> Vec<EvaluationOutcome> {
        self.outcomes
            .iter()
            .filter(|o| o.method_name == label)
            .cloned()
            .collect()
    }
}

/// Leave-one-group-out evaluation.
///
/// Each fold holds out one group (or, under [`LeakageMode::ExcludeSameProblem`],
/// every group of one problem, since they share the same training set), fits
/// one RCR and one ACR classifier on the remaining groups sorted by group id
/// and scores every method on each held-out group. Fold seeds come from the
/// master seed and the held-out unit's id, so results do not depend on the
/// input order of `groups`.
pub fn leave_one_group_out(
    groups: &[VirtualGroup],
    methods: &[NamedMethod],
    config: &EvalConfig,
) -> Result<EvaluationRun> {
    if groups.len() < 2 {
        return Err(Error::InsufficientGroups(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for g in groups {
        if !seen.insert(g.group_id.as_str()) {
            return Err(Error::InvalidConfig(format!("duplicate group id `{}`", g.group_id)));
        }
        if g.responses.answer_set().correct_index.is_none() {
            return Err(Error::MissingGroundTruth {
                problem_id: g.problem_id.clone(),
            });
        }
    }
    let needs = |rep| methods.iter().any(|m| m.method.representation() == Some(rep));
    let (needs_rcr, needs_acr) = (needs(Representation::Rcr), needs(Representation::Acr));
    let learner = if needs_rcr || needs_acr {
        Some(LearnerRegistry::builtin().create(&config.learner, &config.learners)?)
    } else {
        None
    };

    let rcr_rows: Vec<Vec<LabeledResponseRow>> = if needs_rcr {
        groups
            .par_iter()
            .map(|g| rcr_dataset([(g.group_id.as_str(), &g.responses)], &config.rcr))
            .collect::<Result<_>>()?
    } else {
        vec![]
    };
    let acr_rows: Vec<Vec<LabeledAnswerRow>> = if needs_acr {
        groups
            .par_iter()
            .map(|g| acr_dataset([(g.group_id.as_str(), &g.responses)], &config.acr))
            .collect::<Result<_>>()?
    } else {
        vec![]
    };

    // fold units: held-out group indices keyed by a stable id
    let mut units: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        let key = match config.leakage_mode {
            LeakageMode::ExcludeSameProblem => g.problem_id.clone(),
            LeakageMode::ExcludeGroupOnly => g.group_id.clone(),
        };
        units.entry(key).or_default().push(i);
    }
    let mut by_id: Vec<usize> = (0..groups.len()).collect();
    by_id.sort_by(|&a, &b| groups[a].group_id.cmp(&groups[b].group_id));

    let units: Vec<(String, Vec<usize>)> = units.into_iter().collect();
    let folds = units
        .par_iter()
        .map(|(key, held)| -> Result<(FoldAudit, Vec<(usize, EvaluationOutcome)>)> {
            let held_problems: BTreeSet<&str> = held.iter().map(|&i| groups[i].problem_id.as_str()).collect();
            let held_ids: BTreeSet<&str> = held.iter().map(|&i| groups[i].group_id.as_str()).collect();
            let training: Vec<usize> = by_id
                .iter()
                .copied()
                .filter(|&i| match config.leakage_mode {
                    LeakageMode::ExcludeSameProblem => !held_problems.contains(groups[i].problem_id.as_str()),
                    LeakageMode::ExcludeGroupOnly => !held_ids.contains(groups[i].group_id.as_str()),
                })
                .collect();
            let mut audit = FoldAudit {
                held_out: held_ids.iter().map(|s| s.to_string()).collect(),
                training_groups: training.len(),
                rcr_rows: 0,
                acr_rows: 0,
            };
            let mut fit = |rep: Representation| -> Result<ProbabilisticClassifier> {
                if training.is_empty() {
                    return Err(Error::InsufficientGroups(format!(
                        "no training groups remain when holding out `{key}` under {}",
                        config.leakage_mode
                    )));
                }
                let tm = match rep {
                    Representation::Rcr => {
                        let rows: Vec<LabeledResponseRow> =
                            training.iter().flat_map(|&i| rcr_rows[i].iter().cloned()).collect();
                        audit.rcr_rows = rows.len();
                        TrainingMatrix::from_rcr(&rows, &config.rcr)
                    }
                    Representation::Acr => {
                        let rows: Vec<LabeledAnswerRow> =
                            training.iter().flat_map(|&i| acr_rows[i].iter().cloned()).collect();
                        audit.acr_rows = rows.len();
                        TrainingMatrix::from_acr(&rows, &config.acr)
                    }
                };
                audit_fold(&tm, &held_ids, &held_problems, config.leakage_mode)?;
                let seed = derive_seed(config.seed, &format!("{rep}:{key}"));
                learner.as_ref().expect("learner built when needed").fit(&tm, seed)
            };
            let rcr_model = if needs_rcr {
                Some(fit(Representation::Rcr)?)
            } else {
                None
            };
            let acr_model = if needs_acr {
                Some(fit(Representation::Acr)?)
            } else {
                None
            };

            let mut outcomes = Vec::new();
            for &gi in held {
                let g = &groups[gi];
                let correct_index = g.responses.answer_set().correct_index.expect("checked above");
                let unlabeled = g.responses.unlabeled();
                for (mi, m) in methods.iter().enumerate() {
                    let model = match m.method.representation() {
                        Some(Representation::Rcr) => rcr_model.as_ref(),
                        Some(Representation::Acr) => acr_model.as_ref(),
                        None => None,
                    };
                    let r = m.method.aggregate(&unlabeled, model)?;
                    outcomes.push((
                        mi,
                        EvaluationOutcome {
                            group_id: g.group_id.clone(),
                            problem_id: g.problem_id.clone(),
                            method_name: m.label.clone(),
                            chosen: r.chosen,
                            correct_index,
                            correct: r.chosen == correct_index,
                            tie_broken: r.tie_broken,
                        },
                    ));
                }
            }
            Ok((audit, outcomes))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut outcomes = Vec::new();
    let mut audits = Vec::new();
    for (audit, o) in folds {
        audits.push(audit);
        outcomes.extend(o);
    }
    outcomes.sort_by(|(ma, a), (mb, b)| ma.cmp(mb).then_with(|| a.group_id.cmp(&b.group_id)));
    Ok(EvaluationRun {
        outcomes: outcomes.into_iter().map(|(_, o)| o).collect(),
        folds: audits,
    })
}

fn audit_fold(
    tm: &TrainingMatrix,
    held_ids: &BTreeSet<&str>,
    held_problems: &BTreeSet<&str>,
    mode: LeakageMode,
) -> Result<()> {
    for (gid, pid) in tm.group_ids.iter().zip(&tm.problem_ids) {
        let leaked = held_ids.contains(gid.as_str())
            || (mode == LeakageMode::ExcludeSameProblem && held_problems.contains(pid.as_str()));
        if leaked {
            return Err(Error::Leakage { group_id: gid.clone() });
        }
    }
    Ok(())
}
