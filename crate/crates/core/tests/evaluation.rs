use crowd_agg::eval::attribution::{kernel_attribution, permutation_importance};
use crowd_agg::eval::groups::{sample_virtual_groups, VirtualGroup};
use crowd_agg::eval::logo::{leave_one_group_out, EvalConfig, LeakageMode, NamedMethod};
use crowd_agg::eval::report::{pairwise_mcnemar, summarize, write_attributions, write_outcomes, write_success_rates};
use crowd_agg::eval::stats::mcnemar_exact;
use crowd_agg::learners::{LearnerConfig, LearnerRegistry};
use crowd_agg::methods::{MethodConfig, MethodRegistry};
use crowd_agg::synth::{generate, preset};
use crowd_agg::Error;

fn groups(problems: usize, per_problem: usize) -> Vec<VirtualGroup> {
    let pools = generate(&preset("easy-majority").unwrap(), problems, 40).unwrap();
    sample_virtual_groups(&pools, 20, per_problem, 3).unwrap()
}

fn methods(names: &[&str]) -> Vec<NamedMethod> {
    let registry = MethodRegistry::builtin();
    names
        .iter()
        .map(|n| NamedMethod::new(registry.create(n, &MethodConfig::default()).unwrap()))
        .collect()
}

fn fast_config(mode: LeakageMode) -> EvalConfig {
    EvalConfig {
        leakage_mode: mode,
        learner: "logistic-regression".into(),
        ..EvalConfig::default()
    }
}

#[test]
fn folds_never_train_on_the_held_out_problem() {
    let gs = groups(6, 2);
    let run = leave_one_group_out(
        &gs,
        &methods(&["mr", "rcr-agg", "acr-agg"]),
        &fast_config(LeakageMode::ExcludeSameProblem),
    )
    .unwrap();
    assert_eq!(run.folds.len(), 6);
    for fold in &run.folds {
        assert_eq!(fold.held_out.len(), 2);
        assert_eq!(fold.training_groups, 10);
        assert!(fold.rcr_rows == 10 * 20 && fold.acr_rows > 0);
    }
    assert_eq!(run.outcomes.len(), 3 * gs.len());

    let loose = leave_one_group_out(&gs, &methods(&["rcr-agg"]), &fast_config(LeakageMode::ExcludeGroupOnly)).unwrap();
    assert_eq!(loose.folds.len(), gs.len());
    assert!(loose.folds.iter().all(|f| f.training_groups == gs.len() - 1));
}

#[test]
fn results_do_not_depend_on_group_order() {
    let gs = groups(5, 2);
    let mut reversed = gs.clone();
    reversed.reverse();
    let m = methods(&["sp", "rcr-agg"]);
    let cfg = fast_config(LeakageMode::ExcludeSameProblem);
    let a = leave_one_group_out(&gs, &m, &cfg).unwrap();
    let b = leave_one_group_out(&reversed, &m, &cfg).unwrap();
    assert_eq!(a.outcomes, b.outcomes);
}

#[test]
fn single_problem_cannot_be_evaluated_without_leakage() {
    let gs = groups(1, 3);
    let err = leave_one_group_out(
        &gs,
        &methods(&["rcr-agg"]),
        &fast_config(LeakageMode::ExcludeSameProblem),
    )
    .unwrap_err();
    assert!(matches!(err, Error::InsufficientGroups(_)));
    // rule-only runs need no training data
    assert!(leave_one_group_out(&gs, &methods(&["mr"]), &fast_config(LeakageMode::ExcludeSameProblem)).is_ok());
}

#[test]
fn unlabeled_groups_are_rejected() {
    let mut gs = groups(2, 1);
    gs[0].responses = gs[0].responses.unlabeled();
    let err = leave_one_group_out(&gs, &methods(&["mr"]), &EvalConfig::default()).unwrap_err();
    assert!(matches!(err, Error::MissingGroundTruth { .. }));
}

#[test]
fn mcnemar_requires_matching_groups() {
    let gs = groups(3, 1);
    let run = leave_one_group_out(&gs, &methods(&["mr", "wc"]), &EvalConfig::default()).unwrap();
    let (mr, wc) = (run.for_method("mr"), run.for_method("wc"));
    let ok = mcnemar_exact(&mr, &wc).unwrap();
    assert!(ok.p_value <= 1.0);
    let err = mcnemar_exact(&mr[1..], &wc).unwrap_err();
    assert!(matches!(err, Error::UnpairedOutcomes(_)));
}

#[test]
fn report_writers_emit_stable_headers() {
    let gs = groups(3, 2);
    let labels = vec!["mr".to_string(), "hac".to_string()];
    let run = leave_one_group_out(&gs, &methods(&["mr", "hac"]), &EvalConfig::default()).unwrap();

    let mut rates = Vec::new();
    write_success_rates(&summarize(&run.outcomes, &labels), &mut rates).unwrap();
    let rates = String::from_utf8(rates).unwrap();
    assert!(rates.starts_with("method,groups,correct,success_rate,tie_broken\nmr,6,"));
    assert_eq!(rates.lines().count(), 3);

    let mut outcomes = Vec::new();
    write_outcomes(&run.outcomes, &mut outcomes).unwrap();
    let outcomes = String::from_utf8(outcomes).unwrap();
    assert!(outcomes.starts_with("method,group_id,problem_id,chosen,correct_index,correct,tie_broken\n"));
    assert_eq!(outcomes.lines().count(), 1 + 12);
    assert_eq!(pairwise_mcnemar(&run.outcomes, &labels).unwrap().len(), 1);
}

#[test]
fn attribution_reports_cover_every_feature() {
    let gs = groups(4, 1);
    let opts = crowd_agg::features::RcrOptions::default();
    let rows = crowd_agg::features::rcr_dataset(gs.iter().map(|g| (g.group_id.as_str(), &g.responses)), &opts).unwrap();
    let tm = crowd_agg::dataset::TrainingMatrix::from_rcr(&rows, &opts);
    let model = LearnerRegistry::builtin()
        .create("logistic-regression", &LearnerConfig::default())
        .unwrap()
        .fit(&tm, 1)
        .unwrap();

    let importance = permutation_importance(&model, &tm, 2, 1).unwrap();
    assert_eq!(importance.len(), tm.n_features());
    assert!(importance.windows(2).all(|w| w[0].importance >= w[1].importance));
    assert!(matches!(
        permutation_importance(&model, &tm, 0, 1),
        Err(Error::InvalidRepeatCount)
    ));

    let background: Vec<Vec<f64>> = tm.rows.iter().take(10).cloned().collect();
    let a = kernel_attribution(&model, &tm.rows[20], &background, 256, 4).unwrap();
    assert!(matches!(
        kernel_attribution(&model, &tm.rows[20], &[], 256, 4),
        Err(Error::EmptyBackground)
    ));
    let mut out = Vec::new();
    write_attributions(&tm.feature_names, &[(20, a)], &mut out).unwrap();
    let out = String::from_utf8(out).unwrap();
    assert!(out.starts_with("instance,feature,value,base_value,prediction,exact\n"));
    assert_eq!(out.lines().count(), 1 + tm.n_features());
}
