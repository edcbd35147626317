//! Curation strategies turning similarity reductions or metadata into
//! ranked pre-training manifests.

mod avg_sim;
mod heuristic;
mod knn;
mod schedule;

pub use avg_sim::curate_avg_sim;
pub use heuristic::{curate_heuristic, tokenize_title, vocabulary_from_titles, HeuristicRules};
pub use knn::{curate_knn, knn_pool, KnnPool, RowTopkProvider, StreamingTopk};
pub use schedule::{
    build_incremental_schedule, read_schedule, split_steps, validate_stage_sizes, write_schedule,
    ScheduleRecord, Stage, StagedSchedule,
};

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{CupidError, Result};
use crate::jsonl;
use crate::similarity::PoolingMode;

pub const DEFAULT_EXPANSION_FACTOR: f64 = 3.0;
pub const DEFAULT_CAPACITY: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    AvgSim,
    Knn,
    Heuristic,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::AvgSim => "avg_sim",
            Strategy::Knn => "knn",
            Strategy::Heuristic => "heuristic",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = CupidError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg_sim" | "avg-sim" => Ok(Strategy::AvgSim),
            "knn" => Ok(Strategy::Knn),
            "heuristic" => Ok(Strategy::Heuristic),
            other => Err(CupidError::Argument(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurationConfig {
    pub capacity_c: usize,
    pub strategy: Strategy,
    pub expansion_factor: f64,
    pub seed: u64,
    pub pooling: PoolingMode,
}

impl CurationConfig {
    pub fn new(strategy: Strategy, capacity_c: usize) -> Self {
        Self {
            capacity_c,
            strategy,
            expansion_factor: DEFAULT_EXPANSION_FACTOR,
            seed: 0,
            pooling: PoolingMode::Mean,
        }
    }

    /// Checks ranges; `source_count` is required for similarity strategies.
    pub fn validate(&self, source_count: Option<usize>) -> Result<()> {
        if self.capacity_c == 0 {
            return Err(CupidError::Argument("capacity must be at least 1".into()));
        }
        if !(2.0..=4.0).contains(&self.expansion_factor) {
            return Err(CupidError::Argument(format!(
                "expansion factor {} outside [2, 4]",
                self.expansion_factor
            )));
        }
        if self.strategy != Strategy::Heuristic {
            if let Some(n) = source_count {
                if self.capacity_c > n {
                    return Err(CupidError::Capacity(format!(
                        "capacity {} exceeds source corpus size {n}",
                        self.capacity_c
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuratedEntry {
    pub rank: usize,
    pub video_id: String,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurationManifest {
    pub strategy: Strategy,
    pub entries: Vec<CuratedEntry>,
    pub config_echo: CurationConfig,
    pub excluded_count: usize,
}

impl CurationManifest {
    pub(crate) fn from_ranked(
        config: CurationConfig,
        ranked: impl IntoIterator<Item = (String, Option<f64>)>,
    ) -> Self {
        Self {
            strategy: config.strategy,
            entries: ranked
                .into_iter()
                .enumerate()
                .map(|(i, (video_id, score))| CuratedEntry {
                    rank: i + 1,
                    video_id,
                    score,
                })
                .collect(),
            config_echo: config,
            excluded_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.video_id.as_str())
    }

    /// The first `c` entries, as used for nested incremental stages.
    pub fn truncated(&self, c: usize) -> Self {
        let mut out = self.clone();
        out.entries.truncate(c);
        out.config_echo.capacity_c = out.entries.len();
        out
    }

    /// Ranks contiguous from 1, unique ids.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(CupidError::Format(format!(
                    "manifest rank {} at position {}",
                    e.rank,
                    i + 1
                )));
            }
            if !seen.insert(e.video_id.as_str()) {
                return Err(CupidError::data(&e.video_id, "duplicate id in manifest"));
            }
        }
        Ok(())
    }
}

/// Removes every entry whose id appears downstream and recompacts ranks.
pub fn exclude_overlap(manifest: &CurationManifest, downstream_ids: &HashSet<String>) -> CurationManifest {
    let kept: Vec<(String, Option<f64>)> = manifest
        .entries
        .iter()
        .filter(|e| !downstream_ids.contains(&e.video_id))
        .map(|e| (e.video_id.clone(), e.score))
        .collect();
    let removed = manifest.len() - kept.len();
    let mut out = CurationManifest::from_ranked(manifest.config_echo, kept);
    out.strategy = manifest.strategy;
    out.excluded_count = manifest.excluded_count + removed;
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestLine {
    rank: usize,
    video_id: String,
    score: Option<f64>,
    strategy: Strategy,
}

/// Sidecar metadata written next to a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSidecar {
    pub strategy: Strategy,
    pub config: CurationConfig,
    pub count: usize,
    pub excluded_count: usize,
}

pub fn manifest_to_jsonl(manifest: &CurationManifest) -> Result<Vec<u8>> {
    let lines: Vec<ManifestLine> = manifest
        .entries
        .iter()
        .map(|e| ManifestLine {
            rank: e.rank,
            video_id: e.video_id.clone(),
            score: e.score,
            strategy: manifest.strategy,
        })
        .collect();
    jsonl::to_jsonl_bytes(&lines)
}

pub fn manifest_sidecar(manifest: &CurationManifest) -> ManifestSidecar {
    ManifestSidecar {
        strategy: manifest.strategy,
        config: manifest.config_echo,
        count: manifest.len(),
        excluded_count: manifest.excluded_count,
    }
}

pub fn read_manifest<R: BufRead>(lines: R, sidecar: &ManifestSidecar) -> Result<CurationManifest> {
    let lines: Vec<ManifestLine> = jsonl::read_jsonl(lines)?;
    if let Some(bad) = lines.iter().find(|l| l.strategy != sidecar.strategy) {
        return Err(CupidError::Format(format!(
            "manifest line for '{}' has strategy {}, sidecar says {}",
            bad.video_id, bad.strategy, sidecar.strategy
        )));
    }
    if lines.len() != sidecar.count {
        return Err(CupidError::Format(format!(
            "manifest has {} lines, sidecar says {}",
            lines.len(),
            sidecar.count
        )));
    }
    let manifest = CurationManifest {
        strategy: sidecar.strategy,
        entries: lines
            .into_iter()
            .map(|l| CuratedEntry {
                rank: l.rank,
                video_id: l.video_id,
                score: l.score,
            })
            .collect(),
        config_echo: sidecar.config,
        excluded_count: sidecar.excluded_count,
    };
    manifest.validate()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(n: usize) -> CurationManifest {
        CurationManifest::from_ranked(
            CurationConfig::new(Strategy::AvgSim, n),
            (0..n).map(|i| (format!("v{i:02}"), Some(1.0 - i as f64 / 10.0))),
        )
    }

    #[test]
    fn disjoint_overlap_is_noop() {
        let m = manifest(4);
        let out = exclude_overlap(&m, &HashSet::from(["zz".to_owned()]));
        assert_eq!(out, m);
        assert_eq!(out.excluded_count, 0);
    }

    #[test]
    fn full_overlap_empties() {
        let m = manifest(4);
        let all: HashSet<String> = m.ids().map(str::to_owned).collect();
        let out = exclude_overlap(&m, &all);
        assert!(out.is_empty());
        assert_eq!(out.excluded_count, 4);
    }

    #[test]
    fn three_of_ten_removed() {
        let m = manifest(10);
        let drop: HashSet<String> = ["v01", "v05", "v09"].iter().map(|s| s.to_string()).collect();
        let out = exclude_overlap(&m, &drop);
        assert_eq!(out.len(), 7);
        assert_eq!(out.entries.iter().map(|e| e.rank).collect::<Vec<_>>(), (1..=7).collect::<Vec<_>>());
        assert_eq!(out.excluded_count, 3);
        assert!(out.ids().all(|id| !drop.contains(id)));
        assert_eq!(out.entries[1].video_id, "v02");
        out.validate().unwrap();
    }

    #[test]
    fn manifest_file_round_trip() {
        let mut m = manifest(5);
        m.entries[2].score = None;
        m.excluded_count = 2;
        let bytes = manifest_to_jsonl(&m).unwrap();
        let side = manifest_sidecar(&m);
        let side: ManifestSidecar = serde_json::from_str(&serde_json::to_string(&side).unwrap()).unwrap();
        assert_eq!(read_manifest(&bytes[..], &side).unwrap(), m);
    }

    #[test]
    fn config_validation() {
        let mut c = CurationConfig::new(Strategy::Knn, 10);
        assert!(c.validate(Some(10)).is_ok());
        assert!(matches!(c.validate(Some(9)), Err(CupidError::Capacity(_))));
        c.expansion_factor = 4.5;
        assert!(c.validate(Some(10)).is_err());
        c.expansion_factor = 2.0;
        c.capacity_c = 0;
        assert!(c.validate(None).is_err());
    }

    #[test]
    fn strategy_names() {
        assert_eq!("avg-sim".parse::<Strategy>().unwrap(), Strategy::AvgSim);
        assert_eq!(Strategy::AvgSim.to_string(), "avg_sim");
        assert_eq!(serde_json::to_string(&Strategy::AvgSim).unwrap(), "\"avg_sim\"");
    }
}
