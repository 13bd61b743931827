//! Settings resolution: flags override the `--config` file, which overrides
//! built-in defaults.

use std::path::Path;

use anyhow::{Context, Result};
use crowd_agg::aggregators::{StrategySpec, DEFAULT_THRESHOLD};
use crowd_agg::eval::groups::DEFAULT_GROUP_SIZE;
use crowd_agg::eval::logo::LeakageMode;
use crowd_agg::learners::LearnerConfig;
use crowd_agg::model::IngestOptions;
use serde::{Deserialize, Serialize};

pub const DEFAULT_METHODS: [&str; 7] = ["mr", "wc", "hac", "sp", "spog", "rcr-agg", "acr-agg"];
pub const DEFAULT_GROUPS_PER_PROBLEM: usize = 4;
pub const DEFAULT_LEARNER: &str = "ensemble";

/// Contents of a `--config` TOML file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub group_size: Option<usize>,
    pub groups_per_problem: Option<usize>,
    pub leakage_mode: Option<LeakageMode>,
    pub strategy: Option<String>,
    pub tie_breaker: Option<String>,
    pub threshold: Option<f64>,
    pub learner: Option<String>,
    pub methods: Option<Vec<String>>,
    pub learners: Option<LearnerConfig>,
    pub ingest: Option<IngestOptions>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => crowd_agg::Error::FileNotFound(path.display().to_string()),
            _ => crowd_agg::Error::Io(e),
        })?;
        toml::from_str(&text).map_err(|e| {
            crowd_agg::Error::Parse {
                path: path.display().to_string(),
                line: e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0),
                message: e.message().to_string(),
            }
            .into()
        })
    }
}

/// Flag values shared across subcommands; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub group_size: Option<usize>,
    pub groups_per_problem: Option<usize>,
    pub leakage_mode: Option<LeakageMode>,
    pub strategy: Option<String>,
    pub tie_breaker: Option<String>,
    pub threshold: Option<f64>,
    pub learner: Option<String>,
    pub methods: Option<Vec<String>>,
}

/// Fully resolved settings, recorded verbatim in every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub seed: u64,
    pub group_size: usize,
    /// `None` uses every pool whole where a command allows it.
    pub groups_per_problem: Option<usize>,
    pub leakage_mode: LeakageMode,
    pub strategy: StrategySpec,
    pub threshold: f64,
    pub learner: String,
    pub methods: Vec<String>,
    pub learners: LearnerConfig,
    pub ingest: IngestOptions,
}

impl Settings {
    pub fn resolve(flags: FlagOverrides, file: FileConfig) -> Result<Self> {
        let strategy = flags.strategy.or(file.strategy).unwrap_or_else(|| "prop".into());
        let tie_breaker = flags.tie_breaker.or(file.tie_breaker).unwrap_or_else(|| "avgp".into());
        let strategy =
            StrategySpec::parse(&strategy, Some(&tie_breaker)).context("resolving --strategy/--tie-breaker")?;
        Ok(Self {
            seed: flags.seed.or(file.seed).unwrap_or(0),
            group_size: flags.group_size.or(file.group_size).unwrap_or(DEFAULT_GROUP_SIZE),
            groups_per_problem: flags.groups_per_problem.or(file.groups_per_problem),
            leakage_mode: flags.leakage_mode.or(file.leakage_mode).unwrap_or_default(),
            strategy,
            threshold: flags.threshold.or(file.threshold).unwrap_or(DEFAULT_THRESHOLD),
            learner: flags.learner.or(file.learner).unwrap_or_else(|| DEFAULT_LEARNER.into()),
            methods: flags
                .methods
                .or(file.methods)
                .unwrap_or_else(|| DEFAULT_METHODS.iter().map(|s| s.to_string()).collect()),
            learners: file.learners.unwrap_or_default(),
            ingest: file.ingest.unwrap_or_default(),
        })
    }
}
