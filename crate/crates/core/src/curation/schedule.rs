use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::CurationManifest;
use crate::error::{CupidError, Result};
use crate::jsonl;

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub manifest: CurationManifest,
    pub steps: u64,
}

/// Training plan over curated subsets of strictly decreasing size.
#[derive(Debug, Clone, PartialEq)]
pub struct StagedSchedule {
    pub stages: Vec<Stage>,
}

impl StagedSchedule {
    pub fn total_steps(&self) -> u64 {
        self.stages.iter().map(|s| s.steps).sum()
    }
}

/// Even split of `total` over `stages`; the remainder goes one step each to
/// the earliest stages.
pub fn split_steps(stages: usize, total: u64) -> Result<Vec<u64>> {
    if stages == 0 {
        return Err(CupidError::Argument("schedule needs at least one stage".into()));
    }
    if total < stages as u64 {
        return Err(CupidError::Argument(format!(
            "{total} steps cannot cover {stages} stages"
        )));
    }
    let base = total / stages as u64;
    let extra = (total % stages as u64) as usize;
    Ok((0..stages)
        .map(|i| base + u64::from(i < extra))
        .collect())
}

pub fn validate_stage_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(CupidError::Argument("schedule needs at least one stage".into()));
    }
    if let Some(w) = sizes.windows(2).find(|w| w[1] >= w[0]) {
        return Err(CupidError::Argument(format!(
            "stage sizes must strictly decrease, got {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

pub fn build_incremental_schedule(manifests: Vec<CurationManifest>, total_steps: u64) -> Result<StagedSchedule> {
    let sizes: Vec<usize> = manifests.iter().map(CurationManifest::len).collect();
    validate_stage_sizes(&sizes)?;
    let steps = split_steps(manifests.len(), total_steps)?;
    Ok(StagedSchedule {
        stages: manifests
            .into_iter()
            .zip(steps)
            .map(|(manifest, steps)| Stage { manifest, steps })
            .collect(),
    })
}

/// One line of a schedule file. `manifest_path` is null for plan-only
/// schedules built from sizes alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub stage: usize,
    pub manifest_path: Option<String>,
    pub steps: u64,
    pub size: usize,
}

pub fn write_schedule(records: &[ScheduleRecord]) -> Result<Vec<u8>> {
    jsonl::to_jsonl_bytes(records)
}

pub fn read_schedule<R: BufRead>(reader: R) -> Result<Vec<ScheduleRecord>> {
    let records: Vec<ScheduleRecord> = jsonl::read_jsonl(reader)?;
    for (i, r) in records.iter().enumerate() {
        if r.stage != i + 1 {
            return Err(CupidError::Format(format!("schedule stage {} at line {}", r.stage, i + 1)));
        }
    }
    let sizes: Vec<usize> = records.iter().map(|r| r.size).collect();
    validate_stage_sizes(&sizes)?;
    Ok(records)
}
