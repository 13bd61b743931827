use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_crowd-agg"));
    c.env_remove("CROWD_AGG_THREADS");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn crowd-agg")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "crowd-agg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn synth(dir: &Path, preset: &str, problems: &str, respondents: &str) {
    ok(
        dir,
        &[
            "synth",
            "--preset",
            preset,
            "--problems",
            problems,
            "--respondents",
            respondents,
            "--out",
            "data",
        ],
    );
}

fn rate(csv: &str, method: &str) -> f64 {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[0] == method)
        .map(|f| f[3].parse().unwrap())
        .unwrap_or_else(|| panic!("no row for {method}"))
}

#[test]
fn learned_method_without_model_is_a_model_required_error() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "easy-majority", "3", "40");
    for method in ["rcr-agg", "acr-agg"] {
        let out = run_in(tmp.path(), &["aggregate", "--data", "data", "--method", method]);
        assert!(!out.status.success());
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"], "ModelRequired");
    }
    let out = run_in(tmp.path(), &["aggregate", "--data", "missing", "--method", "mr"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "FileNotFound");
}

#[test]
fn easy_majority_mr_rate_is_one() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "easy-majority", "50", "120");
    ok(
        tmp.path(),
        &["evaluate", "--data", "data", "--methods", "mr,sp", "--out", "report"],
    );
    let csv = std::fs::read_to_string(tmp.path().join("report/success_rates.csv")).unwrap();
    let mr = rate(&csv, "mr");
    assert!((mr - 1.0).abs() <= 0.02, "MR rate {mr}");
    assert_eq!(csv.lines().count(), 3);
}

const BUNDLE: [&str; 5] = [
    "success_rates.csv",
    "mcnemar.csv",
    "outcomes.csv",
    "strategy_grid.csv",
    "success_rates.svg",
];

#[test]
fn identical_evaluations_write_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "hidden-expertise", "8", "60");
    for out in ["a", "b"] {
        ok(
            tmp.path(),
            &[
                "evaluate",
                "--data",
                "data",
                "--seed",
                "11",
                "--groups-per-problem",
                "2",
                "--strategy-grid",
                "--out",
                out,
            ],
        );
    }
    for name in BUNDLE {
        let a = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn rerun_from_manifest_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "overconfident-crowd", "6", "60");
    ok(
        tmp.path(),
        &[
            "evaluate",
            "--data",
            "data",
            "--seed",
            "3",
            "--groups-per-problem",
            "2",
            "--learner",
            "logistic-regression",
            "--out",
            "first",
        ],
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("first/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "evaluate");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config"]["learner"], "logistic-regression");
    let again = tmp.path().join("again");
    ok(
        Path::new("/"),
        &[
            "rerun",
            tmp.path().join("first/manifest.json").to_str().unwrap(),
            "--out",
            again.to_str().unwrap(),
        ],
    );
    for name in ["success_rates.csv", "mcnemar.csv", "outcomes.csv"] {
        assert_eq!(
            std::fs::read(tmp.path().join("first").join(name)).unwrap(),
            std::fs::read(again.join(name)).unwrap()
        );
    }

    // synthetic data reruns byte for byte too
    ok(tmp.path(), &["rerun", "data/manifest.json", "--out", "data2"]);
    for name in ["responses.jsonl", "answer_key.jsonl"] {
        assert_eq!(
            std::fs::read(tmp.path().join("data").join(name)).unwrap(),
            std::fs::read(tmp.path().join("data2").join(name)).unwrap()
        );
    }
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "easy-majority", "4", "40");
    std::fs::write(
        tmp.path().join("run.toml"),
        "seed = 21\nthreshold = 0.6\nstrategy = \"maj\"\nmethods = [\"mr\", \"hac\"]\ngroup_size = 20\n",
    )
    .unwrap();
    ok(
        tmp.path(),
        &[
            "evaluate",
            "--config",
            "run.toml",
            "--data",
            "data",
            "--seed",
            "5",
            "--groups-per-problem",
            "1",
            "--out",
            "r",
        ],
    );
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("r/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["threshold"], 0.6);
    assert_eq!(m["config"]["group_size"], 20);
    assert_eq!(m["config"]["strategy"]["strategy"], "maj");
    let csv = std::fs::read_to_string(tmp.path().join("r/success_rates.csv")).unwrap();
    assert_eq!(
        csv.lines().map(|l| l.split(',').next().unwrap()).collect::<Vec<_>>(),
        ["method", "mr", "hac"]
    );

    std::fs::write(tmp.path().join("bad.toml"), "sede = 1\n").unwrap();
    let out = run_in(
        tmp.path(),
        &["evaluate", "--config", "bad.toml", "--data", "data", "--out", "r2"],
    );
    assert!(!out.status.success());
}

#[test]
fn train_aggregate_attribute_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, "mixed-battery", "10", "50");
    ok(
        d,
        &[
            "featurize",
            "--data",
            "data",
            "--representation",
            "acr",
            "--out",
            "feat/acr.csv",
        ],
    );
    assert!(d.join("feat/acr.manifest.json").exists());
    ok(
        d,
        &[
            "train",
            "--matrix",
            "feat/acr.csv",
            "--learner",
            "logistic-regression",
            "--out",
            "acr.json",
        ],
    );
    ok(
        d,
        &[
            "aggregate",
            "--data",
            "data",
            "--method",
            "acr-agg",
            "--model",
            "acr.json",
            "--out",
            "agg.json",
        ],
    );
    let results: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("agg.json")).unwrap()).unwrap();
    assert_eq!(results.as_array().unwrap().len(), 10);
    assert_eq!(results[0]["result"]["method_name"], "acr-agg");

    // a model of the wrong representation is rejected
    ok(
        d,
        &[
            "train",
            "--data",
            "data",
            "--representation",
            "rcr",
            "--learner",
            "lda",
            "--out",
            "rcr.json",
        ],
    );
    let out = run_in(
        d,
        &[
            "aggregate",
            "--data",
            "data",
            "--method",
            "acr-agg",
            "--model",
            "rcr.json",
        ],
    );
    assert!(!out.status.success());

    ok(
        d,
        &[
            "attribute",
            "--model",
            "acr.json",
            "--matrix",
            "feat/acr.csv",
            "--method",
            "perm",
            "--out",
            "perm.csv",
        ],
    );
    let perm = std::fs::read_to_string(d.join("perm.csv")).unwrap();
    assert_eq!(
        perm.lines().next().unwrap(),
        "representation,rank,feature,importance,std"
    );
    assert_eq!(perm.lines().count(), 1 + 16);

    ok(
        d,
        &[
            "attribute",
            "--model",
            "acr.json",
            "--matrix",
            "feat/acr.csv",
            "--method",
            "kernel",
            "--instances",
            "3",
            "--out",
            "kernel.csv",
        ],
    );
    let kernel = std::fs::read_to_string(d.join("kernel.csv")).unwrap();
    let mut sums = std::collections::BTreeMap::<String, (f64, f64)>::new();
    for line in kernel.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let e = sums.entry(f[0].to_string()).or_insert((0.0, 0.0));
        e.0 += f[2].parse::<f64>().unwrap();
        e.1 = f[4].parse::<f64>().unwrap() - f[3].parse::<f64>().unwrap();
    }
    assert_eq!(sums.len(), 3);
    for (sum, gap) in sums.values() {
        assert!((sum - gap).abs() < 1e-6, "local accuracy: {sum} vs {gap}");
    }
}

#[test]
fn thread_cap_must_be_positive() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(tmp.path())
        .env("CROWD_AGG_THREADS", "0")
        .args(["synth", "--preset", "easy-majority", "--problems", "2", "--out", "d"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = bin()
        .current_dir(tmp.path())
        .env("CROWD_AGG_THREADS", "1")
        .args(["synth", "--preset", "easy-majority", "--problems", "2", "--out", "d"])
        .output()
        .unwrap();
    assert!(out.status.success());
}
