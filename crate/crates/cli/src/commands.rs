use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::SystemTime;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use crowd_agg::aggregators::StrategySpec;
use crowd_agg::dataset::TrainingMatrix;
use crowd_agg::error::Error;
use crowd_agg::eval::attribution::{kernel_attribution, permutation_importance};
use crowd_agg::eval::groups::{sample_virtual_groups, whole_pools, VirtualGroup};
use crowd_agg::eval::logo::{leave_one_group_out, EvalConfig, NamedMethod};
use crowd_agg::eval::report;
use crowd_agg::features::{acr_dataset, rcr_dataset, AcrOptions, RcrOptions};
use crowd_agg::io::{load_responses, save_dataset};
use crowd_agg::learners::{LearnerRegistry, ProbabilisticClassifier};
use crowd_agg::methods::{MethodConfig, MethodRegistry, RCR_AGG};
use crowd_agg::model::ResponseSet;
use crowd_agg::result::AggregationResult;
use crowd_agg::rng::derive_seed;
use crowd_agg::synth::{generate, preset, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::config::{Settings, DEFAULT_GROUPS_PER_PROBLEM};
use crate::manifest::{sidecar, RunManifest, MANIFEST_FILE};

pub const SUCCESS_RATES: &str = "success_rates.csv";
pub const SUCCESS_RATES_SVG: &str = "success_rates.svg";
pub const MCNEMAR: &str = "mcnemar.csv";
pub const OUTCOMES: &str = "outcomes.csv";
pub const STRATEGY_GRID: &str = "strategy_grid.csv";
pub const STRATEGY_GRID_SVG: &str = "strategy_grid.svg";
pub const SCENARIO: &str = "scenario.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rep {
    Rcr,
    Acr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttributionMethod {
    Perm,
    Kernel,
}

/// Shared context handed to every command.
pub struct Ctx<'a> {
    pub argv: &'a [String],
    pub settings: Settings,
    pub started: SystemTime,
}

impl Ctx<'_> {
    fn manifest(&self, command: &str) -> Result<RunManifest> {
        RunManifest::new(command, self.argv, &self.settings, self.started)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub struct SynthArgs {
    pub preset: Option<String>,
    pub scenario: Option<PathBuf>,
    pub problems: usize,
    pub respondents: usize,
    pub csv: bool,
    pub out: PathBuf,
    /// Seed given by flag or config file; replaces the scenario's own seed.
    pub seed: Option<u64>,
}

pub fn synth(ctx: &mut Ctx, args: SynthArgs) -> Result<()> {
    let mut scenario = match (&args.scenario, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
                _ => Error::Io(e),
            })?;
            ScenarioConfig::from_toml(&text)?
        }
        (None, name) => preset(name.as_deref().unwrap_or("hidden-expertise"))?,
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    ctx.settings.seed = scenario.seed;
    let sets = generate(&scenario, args.problems, args.respondents)?;
    save_dataset(&args.out, &sets, args.csv)?;
    std::fs::write(args.out.join(SCENARIO), scenario.to_toml()?)?;

    let mut m = ctx.manifest("synth")?;
    if let Some(path) = &args.scenario {
        m.input("scenario", path);
    }
    for name in [crowd_agg::io::RESPONSES_JSONL, crowd_agg::io::ANSWER_KEY, SCENARIO] {
        m.output(&args.out.join(name));
    }
    if args.csv {
        m.output(&args.out.join(crowd_agg::io::RESPONSES_CSV));
    }
    m.write(&args.out.join(MANIFEST_FILE))
}

fn groups_for(settings: &Settings, pools: &[ResponseSet]) -> Result<Vec<VirtualGroup>> {
    Ok(match settings.groups_per_problem {
        Some(count) => sample_virtual_groups(pools, settings.group_size, count, settings.seed)?,
        None => whole_pools(pools),
    })
}

fn build_matrix(groups: &[VirtualGroup], rep: Rep) -> Result<TrainingMatrix> {
    let pairs = groups.iter().map(|g| (g.group_id.as_str(), &g.responses));
    Ok(match rep {
        Rep::Rcr => {
            let opts = RcrOptions::default();
            TrainingMatrix::from_rcr(&rcr_dataset(pairs, &opts)?, &opts)
        }
        Rep::Acr => {
            let opts = AcrOptions::default();
            TrainingMatrix::from_acr(&acr_dataset(pairs, &opts)?, &opts)
        }
    })
}

pub fn featurize(ctx: &mut Ctx, data: &Path, rep: Rep, out: &Path) -> Result<()> {
    let pools = load_responses(data, &ctx.settings.ingest)?;
    let tm = build_matrix(&groups_for(&ctx.settings, &pools)?, rep)?;
    tm.write_csv(create(out)?)?;
    let mut m = ctx.manifest("featurize")?;
    m.input("data", data);
    m.output(out);
    m.write(&sidecar(out))
}

fn read_matrix(path: &Path) -> Result<TrainingMatrix> {
    Ok(TrainingMatrix::read_csv(
        crowd_agg::io::open(path)?,
        &path.display().to_string(),
    )?)
}

pub fn train(ctx: &mut Ctx, data: Option<&Path>, matrix: Option<&Path>, rep: Rep, out: &Path) -> Result<()> {
    let mut m = ctx.manifest("train")?;
    let tm = match (data, matrix) {
        (_, Some(path)) => {
            m.input("matrix", path);
            read_matrix(path)?
        }
        (Some(path), None) => {
            m.input("data", path);
            let pools = load_responses(path, &ctx.settings.ingest)?;
            build_matrix(&groups_for(&ctx.settings, &pools)?, rep)?
        }
        (None, None) => bail!("train needs --data or --matrix"),
    };
    let learner = LearnerRegistry::builtin().create(&ctx.settings.learner, &ctx.settings.learners)?;
    let model = learner.fit(&tm, ctx.settings.seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    model.save(out)?;
    m.output(out);
    m.write(&sidecar(out))
}

/// One entry of the `aggregate` output array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemResult {
    pub problem_id: String,
    pub result: AggregationResult,
}

fn method_config(settings: &Settings) -> MethodConfig {
    MethodConfig {
        strategy: settings.strategy,
        threshold: settings.threshold,
        rcr: RcrOptions::default(),
    }
}

pub fn aggregate(ctx: &mut Ctx, data: &Path, method: &str, model: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let method = MethodRegistry::builtin().create(method, &method_config(&ctx.settings))?;
    if method.representation().is_some() && model.is_none() {
        return Err(Error::ModelRequired { method: method.name() }.into());
    }
    let pools = load_responses(data, &ctx.settings.ingest)?;
    let model_path = model;
    let model = model.map(ProbabilisticClassifier::load).transpose()?;
    let results = pools
        .iter()
        .map(|p| {
            Ok(ProblemResult {
                problem_id: p.problem_id().to_string(),
                result: method.aggregate(&p.unlabeled(), model.as_ref())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = serde_json::to_string_pretty(&results)? + "\n";
    match out {
        Some(out) => {
            create(out)?.write_all(text.as_bytes())?;
            let mut m = ctx.manifest("aggregate")?;
            m.input("data", data);
            if let Some(path) = model_path {
                m.input("model", path);
            }
            m.output(out);
            m.write(&sidecar(out))?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn evaluate(ctx: &mut Ctx, data: &Path, strategy_grid: bool, out: &Path) -> Result<()> {
    let s = &ctx.settings;
    let mut unique = BTreeSet::new();
    if let Some(dup) = s.methods.iter().find(|m| !unique.insert(m.as_str())) {
        return Err(Error::InvalidConfig(format!("method `{dup}` listed twice")).into());
    }
    let registry = MethodRegistry::builtin();
    let config = method_config(s);
    let mut methods = s
        .methods
        .iter()
        .map(|name| Ok(NamedMethod::new(registry.create(name, &config)?)))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = methods.iter().map(|m| m.label.clone()).collect();
    let mut grid = Vec::new();
    if strategy_grid {
        for spec in StrategySpec::all() {
            let label = format!("{RCR_AGG}[{spec}]");
            let method = registry.create(
                RCR_AGG,
                &MethodConfig {
                    strategy: spec,
                    ..config
                },
            )?;
            methods.push(NamedMethod::labeled(label.clone(), Arc::clone(&method)));
            grid.push((spec, label));
        }
    }

    let pools = load_responses(data, &s.ingest)?;
    let groups = sample_virtual_groups(
        &pools,
        s.group_size,
        s.groups_per_problem.unwrap_or(DEFAULT_GROUPS_PER_PROBLEM),
        s.seed,
    )?;
    let eval = EvalConfig {
        leakage_mode: s.leakage_mode,
        learner: s.learner.clone(),
        learners: s.learners.clone(),
        rcr: RcrOptions::default(),
        acr: AcrOptions::default(),
        seed: s.seed,
    };
    let run = leave_one_group_out(&groups, &methods, &eval)?;

    std::fs::create_dir_all(out)?;
    let mut m = ctx.manifest("evaluate")?;
    m.input("data", data);
    let summaries = report::summarize(&run.outcomes, &labels);
    report::write_success_rates(&summaries, create(&out.join(SUCCESS_RATES))?)?;
    let bars: Vec<(String, f64)> = summaries.iter().map(|s| (s.method.clone(), s.success_rate)).collect();
    std::fs::write(
        out.join(SUCCESS_RATES_SVG),
        report::bar_chart_svg("Success rate", &bars),
    )?;
    report::write_mcnemar(
        &report::pairwise_mcnemar(&run.outcomes, &labels)?,
        create(&out.join(MCNEMAR))?,
    )?;
    report::write_outcomes(&run.outcomes, create(&out.join(OUTCOMES))?)?;
    for name in [SUCCESS_RATES, SUCCESS_RATES_SVG, MCNEMAR, OUTCOMES] {
        m.output(&out.join(name));
    }
    if strategy_grid {
        let grid_labels: Vec<String> = grid.iter().map(|(_, l)| l.clone()).collect();
        let rows: Vec<_> = grid
            .iter()
            .map(|(spec, _)| *spec)
            .zip(report::summarize(&run.outcomes, &grid_labels))
            .collect();
        report::write_strategy_grid(&rows, create(&out.join(STRATEGY_GRID))?)?;
        let bars: Vec<(String, f64)> = rows
            .iter()
            .map(|(spec, s)| (spec.to_string(), s.success_rate))
            .collect();
        std::fs::write(
            out.join(STRATEGY_GRID_SVG),
            report::bar_chart_svg("RCR-Agg strategy grid", &bars),
        )?;
        m.output(&out.join(STRATEGY_GRID));
        m.output(&out.join(STRATEGY_GRID_SVG));
    }
    m.write(&out.join(MANIFEST_FILE))
}

pub struct AttributeArgs {
    pub model: PathBuf,
    pub matrix: PathBuf,
    pub method: AttributionMethod,
    pub out: PathBuf,
    pub repeats: usize,
    pub instances: usize,
    pub background: usize,
    pub coalitions: usize,
}

/// `count` indices spread evenly over `0..n`.
fn spread(n: usize, count: usize) -> Vec<usize> {
    let count = count.min(n);
    (0..count).map(|i| i * n / count).collect()
}

pub fn attribute(ctx: &mut Ctx, args: AttributeArgs) -> Result<()> {
    let model = ProbabilisticClassifier::load(&args.model)?;
    let tm = read_matrix(&args.matrix)?;
    let seed = ctx.settings.seed;
    let w = create(&args.out)?;
    match args.method {
        AttributionMethod::Perm => {
            let rep = if tm.answer_index.is_some() { "acr" } else { "rcr" };
            let imps = permutation_importance(&model, &tm, args.repeats, seed)?;
            report::write_importances(&[(rep.to_string(), imps)], w)?;
        }
        AttributionMethod::Kernel => {
            if tm.n_features() != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    got: tm.n_features(),
                }
                .into());
            }
            let background: Vec<Vec<f64>> = spread(tm.n_rows(), args.background)
                .into_iter()
                .map(|i| tm.rows[i].clone())
                .collect();
            let rows = spread(tm.n_rows(), args.instances)
                .into_iter()
                .map(|i| {
                    let a = kernel_attribution(
                        &model,
                        &tm.rows[i],
                        &background,
                        args.coalitions,
                        derive_seed(seed, &format!("instance:{i}")),
                    )?;
                    Ok((i, a))
                })
                .collect::<Result<Vec<_>>>()?;
            report::write_attributions(&tm.feature_names, &rows, w)?;
        }
    }
    let mut m = ctx.manifest("attribute")?;
    m.input("model", &args.model);
    m.input("matrix", &args.matrix);
    m.output(&args.out);
    m.write(&sidecar(&args.out))
}
