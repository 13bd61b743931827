//! `crowd-agg` command-line front end.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::SystemTime;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use crowd_agg::eval::logo::LeakageMode;

use commands::{AttributeArgs, AttributionMethod, Ctx, Rep, SynthArgs};
use config::{FileConfig, FlagOverrides, Settings};
use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(
    name = "crowd-agg",
    version,
    about = "Aggregate crowd answers with votes, confidences and predicted support"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Responses per virtual group [default: 30].
    #[arg(long, global = true)]
    group_size: Option<usize>,
    /// Virtual groups drawn per problem.
    #[arg(long, global = true)]
    groups_per_problem: Option<usize>,
    /// exclude-same-problem or exclude-group-only [default: exclude-same-problem].
    #[arg(long, global = true)]
    leakage_mode: Option<LeakageMode>,
    /// RCR-Agg strategy: maj, prop, wm, avgp, maxp, or `strategy/tie-breaker` [default: prop].
    #[arg(long, global = true)]
    strategy: Option<String>,
    /// Tie-breaker for maj and prop [default: avgp].
    #[arg(long, global = true)]
    tie_breaker: Option<String>,
    /// Probability above which a response or answer is classified True [default: 0.5].
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Learner for train and evaluate [default: ensemble].
    #[arg(long, global = true)]
    learner: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic data set from a preset or scenario file.
    Synth {
        #[arg(long, conflicts_with = "scenario")]
        preset: Option<String>,
        /// Scenario TOML file.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        problems: usize,
        #[arg(long, default_value_t = 120)]
        respondents: usize,
        /// Also write responses.csv.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the RCR or ACR feature matrix of a data set.
    Featurize {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        representation: Rep,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a classifier on a data set or feature matrix.
    Train {
        #[arg(long, required_unless_present = "matrix")]
        data: Option<PathBuf>,
        #[arg(long, conflicts_with = "data")]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "rcr")]
        representation: Rep,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply one aggregation method to every problem of a data set.
    Aggregate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output JSON file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leave-one-group-out evaluation with a report bundle.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated method names [default: all].
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Also evaluate RCR-Agg under all nine strategy combinations.
        #[arg(long)]
        strategy_grid: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Feature attribution for a trained model on a feature matrix.
    Attribute {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum)]
        method: AttributionMethod,
        #[arg(long)]
        out: PathBuf,
        /// Shuffles per feature (perm).
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Instances explained (kernel).
        #[arg(long, default_value_t = 10)]
        instances: usize,
        /// Background rows (kernel).
        #[arg(long, default_value_t = 50)]
        background: usize,
        /// Coalition budget per instance (kernel).
        #[arg(long, default_value_t = 2048)]
        coalitions: usize,
    },
    /// Re-execute the invocation recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        /// Replace the recorded --out path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("CROWD_AGG_THREADS") else {
        return Ok(());
    };
    let n: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        crowd_agg::Error::InvalidConfig(format!("CROWD_AGG_THREADS must be a positive integer, got `{value}`"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")
}

/// Swaps the value of `--out` in a recorded argument vector.
fn replace_out(argv: &mut Vec<String>, out: &std::path::Path) -> Result<()> {
    let out = std::path::absolute(out)?.display().to_string();
    if let Some(i) = argv.iter().position(|a| a == "--out") {
        if i + 1 < argv.len() {
            argv[i + 1] = out;
            return Ok(());
        }
    }
    if let Some(i) = argv.iter().position(|a| a.starts_with("--out=")) {
        argv[i] = format!("--out={out}");
        return Ok(());
    }
    argv.push("--out".into());
    argv.push(out);
    Ok(())
}

fn run(argv: Vec<String>) -> Result<()> {
    let cli = Cli::try_parse_from(&argv)?;
    let g = cli.global;
    let file = FileConfig::load(g.config.as_deref())?;
    let explicit_seed = g.seed.or(file.seed);
    let methods = match &cli.command {
        Command::Evaluate { methods, .. } => methods.clone(),
        _ => None,
    };
    let flags = FlagOverrides {
        seed: g.seed,
        group_size: g.group_size,
        groups_per_problem: g.groups_per_problem,
        leakage_mode: g.leakage_mode,
        strategy: g.strategy,
        tie_breaker: g.tie_breaker,
        threshold: g.threshold,
        learner: g.learner,
        methods,
    };
    let mut ctx = Ctx {
        argv: &argv,
        settings: Settings::resolve(flags, file)?,
        started: SystemTime::now(),
    };
    match cli.command {
        Command::Synth {
            preset,
            scenario,
            problems,
            respondents,
            csv,
            out,
        } => commands::synth(
            &mut ctx,
            SynthArgs {
                preset,
                scenario,
                problems,
                respondents,
                csv,
                out,
                seed: explicit_seed,
            },
        ),
        Command::Featurize {
            data,
            representation,
            out,
        } => commands::featurize(&mut ctx, &data, representation, &out),
        Command::Train {
            data,
            matrix,
            representation,
            out,
        } => commands::train(&mut ctx, data.as_deref(), matrix.as_deref(), representation, &out),
        Command::Aggregate {
            data,
            method,
            model,
            out,
        } => commands::aggregate(&mut ctx, &data, &method, model.as_deref(), out.as_deref()),
        Command::Evaluate {
            data,
            strategy_grid,
            out,
            ..
        } => commands::evaluate(&mut ctx, &data, strategy_grid, &out),
        Command::Attribute {
            model,
            matrix,
            method,
            out,
            repeats,
            instances,
            background,
            coalitions,
        } => commands::attribute(
            &mut ctx,
            AttributeArgs {
                model,
                matrix,
                method,
                out,
                repeats,
                instances,
                background,
                coalitions,
            },
        ),
        Command::Rerun { manifest, out } => {
            let recorded = RunManifest::read(&manifest)?;
            let mut argv = recorded.argv;
            if argv.get(1).is_some_and(|c| c == "rerun") {
                anyhow::bail!("refusing to rerun a rerun manifest");
            }
            if let Some(out) = out {
                replace_out(&mut argv, &out)?;
            }
            std::env::set_current_dir(&recorded.cwd)
                .with_context(|| format!("entering recorded directory {}", recorded.cwd.display()))?;
            run(argv)
        }
    }
}

/// Variant name of the first library error in the chain, for the
/// structured error line.
fn error_kind(e: &anyhow::Error) -> String {
    if let Some(core) = e.chain().find_map(|c| c.downcast_ref::<crowd_agg::Error>()) {
        let debug = format!("{core:?}");
        return debug
            .split(|c: char| !c.is_alphanumeric())
            .next()
            .unwrap_or("Error")
            .to_string();
    }
    if e.downcast_ref::<clap::Error>().is_some() {
        return "Usage".into();
    }
    "Error".into()
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    if let Err(e) = init_threads() {
        eprintln!(
            "{}",
            serde_json::json!({"error": error_kind(&e), "message": format!("{e:#}")})
        );
        return ExitCode::FAILURE;
    }
    match run(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(clap_err) = e.downcast_ref::<clap::Error>() {
                let _ = clap_err.print();
                return if clap_err.use_stderr() {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                };
            }
            eprintln!(
                "{}",
                serde_json::json!({"error": error_kind(&e), "message": format!("{e:#}")})
            );
            ExitCode::FAILURE
        }
    }
}
