//! `cupid` command-line front end.
//!
//! Each command computes all of its primary outputs in memory, then
//! publishes them by writing to a temporary file in the destination
//! directory and renaming it into place. A failed command therefore never
//! leaves a partial primary output behind. Every invocation that passes
//! names an output path also writes `<out>.report.json`.

pub mod commands;
pub mod config;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use cupid_core::CupidError;
use thiserror::Error;

pub use config::{Cli, Command, Opts, RunConfig};
pub use report::{report_path, RunReport};

/// Exit status for usage and validation failures.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for data and runtime failures.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CupidError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(CupidError::Io(e))
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.kind(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(_) => EXIT_FAILURE,
        }
    }

    /// One-line JSON rendering for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

/// Files a command wants published, plus inputs it read.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub inputs: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

impl Outputs {
    pub fn file(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }
}

/// Writes `bytes` to `path` through a same-directory temp file and rename.
pub fn publish(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::from(e.error))?;
    Ok(())
}

/// Merges and validates `cli`, then runs it. A validation failure still
/// leaves a report behind when an output path is known.
pub fn run_cli(cli: Cli) -> Result<serde_json::Value, CliError> {
    let cfg = RunConfig::merged(cli)?;
    if let Err(e) = cfg.validate() {
        if cfg.opts.out.is_some() {
            let report = RunReport::new(&cfg, &[], &[], serde_json::Value::Null, 0.0, 0.0, Some(&e));
            publish(&report_path(&cfg), &report.to_bytes()?)?;
        }
        return Err(e);
    }
    run(&cfg)
}

/// Runs one validated command: compute, publish outputs, write the report.
pub fn run(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let started = Instant::now();
    let result = commands::execute(cfg);
    let compute_ms = started.elapsed().as_secs_f64() * 1e3;

    let (outputs, error) = match result {
        Ok(out) => (Some(out), None),
        Err(e) => (None, Some(e)),
    };
    let mut publish_error = None;
    let mut written = Vec::new();
    if let Some(out) = &outputs {
        for (path, bytes) in &out.files {
            if let Err(e) = publish(path, bytes) {
                publish_error = Some(e);
                break;
            }
            written.push(path.clone());
        }
    }
    let error = error.or(publish_error);
    let total_ms = started.elapsed().as_secs_f64() * 1e3;

    let inputs = outputs.as_ref().map(|o| o.inputs.clone()).unwrap_or_default();
    let summary = outputs
        .as_ref()
        .map(|o| o.summary.clone())
        .unwrap_or(serde_json::Value::Null);
    let report = RunReport::new(cfg, &inputs, &written, summary.clone(), compute_ms, total_ms, error.as_ref());
    publish(&report_path(cfg), &report.to_bytes()?)?;

    match error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}
