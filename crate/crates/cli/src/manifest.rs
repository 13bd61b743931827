use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::Settings;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to reproduce one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector, program name first.
    pub argv: Vec<String>,
    /// Working directory the arguments are relative to.
    pub cwd: PathBuf,
    pub config: Settings,
    pub seed: u64,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
}

pub fn timestamp(t: SystemTime) -> String {
    humantime::format_rfc3339_seconds(t).to_string()
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: &Settings, started: SystemTime) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            argv: argv.to_vec(),
            cwd: std::env::current_dir()?,
            config: config.clone(),
            seed: config.seed,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: timestamp(started),
            finished_at: String::new(),
        })
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn write(mut self, path: &Path) -> Result<()> {
        self.finished_at = timestamp(SystemTime::now());
        let text = serde_json::to_string_pretty(&self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => crowd_agg::Error::FileNotFound(path.display().to_string()),
            _ => crowd_agg::Error::Io(e),
        })?;
        Ok(serde_json::from_str(&text).map_err(crowd_agg::Error::from)?)
    }
}

/// Manifest location for a command whose output is a single file:
/// `<dir>/<stem>.manifest.json`.
pub fn sidecar(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{MANIFEST_FILE}"))
}
