//! Run configuration: command-line flags merged over an optional JSON
//! config file (flags win), then validated per command.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Ingest,
    Similarity,
    Curate,
    Schedule,
    Probe,
    NceCheck,
    Stats,
    Synth,
}

#[derive(Debug, Parser)]
#[command(name = "cupid", version, about = "Curate a target-domain subset of a large video embedding corpus")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// JSON file with default values for any flag (flags take precedence).
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub opts: Opts,
}

/// Every tunable; `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Opts {
    #[arg(long)]
    pub source_manifest: Option<PathBuf>,
    #[arg(long)]
    pub target_manifest: Option<PathBuf>,
    /// Source metadata JSON-lines (heuristic curation).
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    /// Downstream metadata; its titles form the heuristic vocabulary.
    #[arg(long)]
    pub target_metadata: Option<PathBuf>,
    /// avg-sim | knn | heuristic
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub capacity: Option<usize>,
    #[arg(long)]
    pub expansion_factor: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// mean | max
    #[arg(long)]
    pub pooling: Option<String>,
    /// Text file, one downstream video id per line.
    #[arg(long)]
    pub exclude_ids: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub tile_rows: Option<usize>,
    #[arg(long)]
    pub tile_cols: Option<usize>,
    #[arg(long)]
    pub memory_budget_mb: Option<u64>,

    // ingest
    #[arg(long, value_delimiter = ',')]
    pub shards: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub dim: Option<usize>,

    // similarity / curate
    /// Also write the dense kernel dump here.
    #[arg(long)]
    pub dense_out: Option<PathBuf>,
    /// Precomputed column means for avg-sim curation.
    #[arg(long)]
    pub column_means: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub vocabulary: Option<Vec<String>>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub require_human_subtitles: Option<bool>,
    #[arg(long)]
    pub cap: Option<usize>,

    // schedule
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub manifests: Option<Vec<PathBuf>>,
    /// Ranked manifest whose prefixes become the stage manifests.
    #[arg(long)]
    pub ranking: Option<PathBuf>,

    // probe
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,

    // nce-check
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub scale: Option<f64>,

    // synth
    /// planted | random
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub source_count: Option<usize>,
    #[arg(long)]
    pub target_count: Option<usize>,
    #[arg(long)]
    pub max_clips: Option<usize>,
    #[arg(long)]
    pub planted_fraction: Option<f64>,
}

impl Opts {
    /// Fills every field not given on the command line from `file`.
    pub fn merged_over(self, file: Opts) -> Result<Opts, CliError> {
        let flags = serde_json::to_value(&self).map_err(|e| CliError::Usage(e.to_string()))?;
        let mut base = serde_json::to_value(&file).map_err(|e| CliError::Usage(e.to_string()))?;
        if let (Some(base), serde_json::Value::Object(flags)) = (base.as_object_mut(), flags) {
            for (k, v) in flags {
                if !v.is_null() {
                    base.insert(k, v);
                }
            }
        }
        serde_json::from_value(base).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn load_file(path: &Path) -> Result<Opts, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Validated configuration for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(flatten)]
    pub opts: Opts,
}

fn need<'a, T>(value: &'a Option<T>, flag: &str, cmd: Command) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("{cmd:?} requires --{flag}").to_lowercase()))
}

fn need_file(value: &Option<PathBuf>, flag: &str, cmd: Command) -> Result<(), CliError> {
    let path = need(value, flag, cmd)?;
    must_exist(path, flag)
}

fn must_exist(path: &Path, flag: &str) -> Result<(), CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!("--{flag} {} does not exist", path.display())));
    }
    Ok(())
}

fn optional_file(value: &Option<PathBuf>, flag: &str) -> Result<(), CliError> {
    match value {
        Some(p) => must_exist(p, flag),
        None => Ok(()),
    }
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let cfg = Self::merged(cli)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Flags over config file, not yet validated.
    pub fn merged(cli: Cli) -> Result<Self, CliError> {
        let opts = match &cli.config {
            Some(path) => cli.opts.merged_over(Opts::load_file(path)?)?,
            None => cli.opts,
        };
        Ok(RunConfig {
            command: cli.command,
            opts,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let o = &self.opts;
        let cmd = self.command;
        need(&o.out, "out", cmd)?;
        optional_file(&o.exclude_ids, "exclude-ids")?;
        if let Some(p) = &o.pooling {
            if p != "mean" && p != "max" {
                return Err(CliError::Usage(format!("--pooling must be mean or max, got '{p}'")));
            }
        }
        if o.tile_rows == Some(0) || o.tile_cols == Some(0) {
            return Err(CliError::Usage("tile sizes must be positive".into()));
        }
        if let Some(f) = o.expansion_factor {
            if !(2.0..=4.0).contains(&f) {
                return Err(CliError::Usage(format!("--expansion-factor {f} outside [2, 4]")));
            }
        }
        if o.capacity == Some(0) {
            return Err(CliError::Usage("--capacity must be at least 1".into()));
        }
        match cmd {
            Command::Ingest => {
                let shards = need(&o.shards, "shards", cmd)?;
                for s in shards {
                    must_exist(s, "shards")?;
                }
                if *need(&o.dim, "dim", cmd)? == 0 {
                    return Err(CliError::Usage("--dim must be positive".into()));
                }
            }
            Command::Similarity => {
                need_file(&o.source_manifest, "source-manifest", cmd)?;
                need_file(&o.target_manifest, "target-manifest", cmd)?;
            }
            Command::Curate => match self.strategy()? {
                "avg-sim" => {
                    if o.column_means.is_some() {
                        need_file(&o.column_means, "column-means", cmd)?;
                    } else {
                        need_file(&o.source_manifest, "source-manifest", cmd)?;
                        need_file(&o.target_manifest, "target-manifest", cmd)?;
                    }
                }
                "knn" => {
                    need_file(&o.source_manifest, "source-manifest", cmd)?;
                    need_file(&o.target_manifest, "target-manifest", cmd)?;
                }
                "heuristic" => {
                    need_file(&o.metadata, "metadata", cmd)?;
                    let cats = need(&o.categories, "categories", cmd)?;
                    if cats.is_empty() {
                        return Err(CliError::Usage("--categories must not be empty".into()));
                    }
                    if o.vocabulary.is_none() && o.target_metadata.is_none() {
                        return Err(CliError::Usage(
                            "heuristic curation requires --vocabulary or --target-metadata".into(),
                        ));
                    }
                    optional_file(&o.target_metadata, "target-metadata")?;
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "--strategy must be avg-sim, knn or heuristic, got '{other}'"
                    )))
                }
            },
            Command::Schedule => {
                if *need(&o.steps, "steps", cmd)? == 0 {
                    return Err(CliError::Usage("--steps must be positive".into()));
                }
                match (&o.manifests, &o.sizes) {
                    (Some(ms), None) => {
                        for m in ms {
                            must_exist(m, "manifests")?;
                        }
                    }
                    (None, Some(_)) => optional_file(&o.ranking, "ranking")?,
                    _ => {
                        return Err(CliError::Usage(
                            "schedule requires exactly one of --manifests or --sizes".into(),
                        ))
                    }
                }
            }
            Command::Probe => {
                need_file(&o.queries, "queries", cmd)?;
                need_file(&o.candidates, "candidates", cmd)?;
                if o.ks.as_ref().is_some_and(|ks| ks.contains(&0)) {
                    return Err(CliError::Usage("--ks must be positive".into()));
                }
            }
            Command::NceCheck => {
                if o.batch == Some(0) {
                    return Err(CliError::Usage("--batch must be at least 1".into()));
                }
            }
            Command::Stats => {
                if o.source_manifest.is_none() && o.target_manifest.is_none() {
                    return Err(CliError::Usage(
                        "stats requires --source-manifest or --target-manifest".into(),
                    ));
                }
                optional_file(&o.source_manifest, "source-manifest")?;
                optional_file(&o.target_manifest, "target-manifest")?;
            }
            Command::Synth => {
                if let Some(k) = &o.kind {
                    if k != "planted" && k != "random" {
                        return Err(CliError::Usage(format!("--kind must be planted or random, got '{k}'")));
                    }
                }
                if let Some(f) = o.planted_fraction {
                    if !(0.0..=1.0).contains(&f) {
                        return Err(CliError::Usage("--planted-fraction outside [0, 1]".into()));
                    }
                }
                if o.dim == Some(0) || o.source_count == Some(0) || o.target_count == Some(0) || o.max_clips == Some(0) {
                    return Err(CliError::Usage("synth sizes must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn strategy(&self) -> Result<&str, CliError> {
        Ok(need(&self.opts.strategy, "strategy", self.command)?.as_str())
    }

    pub fn out(&self) -> &Path {
        self.opts.out.as_deref().expect("validated")
    }
}
