use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Command, RunConfig};
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub compute_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct RunReport<'a> {
    pub command: Command,
    pub status: &'static str,
    pub config: &'a RunConfig,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
    pub timings: Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<serde_json::Value>,
}

fn sha256_file(path: &Path) -> Option<String> {
    let bytes = std::fs::read(path).ok()?;
    Some(hex::encode(Sha256::digest(&bytes)))
}

/// `<out>.report.json`, or `<out>/run.report.json` for directory outputs.
pub fn report_path(cfg: &RunConfig) -> PathBuf {
    let out = cfg.out();
    if cfg.command == Command::Synth {
        return out.join("run.report.json");
    }
    let mut name = out.as_os_str().to_owned();
    name.push(".report.json");
    PathBuf::from(name)
}

impl<'a> RunReport<'a> {
    pub fn new(
        cfg: &'a RunConfig,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
        summary: serde_json::Value,
        compute_ms: f64,
        total_ms: f64,
        error: Option<&CliError>,
    ) -> Self {
        Self {
            command: cfg.command,
            status: if error.is_some() { "error" } else { "ok" },
            config: cfg,
            inputs: inputs
                .iter()
                .map(|p| InputHash {
                    path: p.display().to_string(),
                    sha256: sha256_file(p),
                })
                .collect(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            summary,
            timings: Timings {
                compute_ms,
                total_ms,
            },
            error: error.map(|e| serde_json::json!({ "kind": e.kind(), "message": e.to_string() })),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| CliError::Core(e.into()))?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}
