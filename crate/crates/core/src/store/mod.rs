//! On-disk corpus format and random access to per-video clip matrices.

mod clips;
mod corpus;
mod meta;
pub mod shard;

pub use clips::{make_uniform_windows, merge_consecutive_subtitles, Subtitle, SubtitleRecord};
pub use corpus::{CorpusHandle, CorpusRole, ShardBytes};
pub use meta::{read_metadata, read_subtitles, validate_metadata, SubtitleSource, VideoMeta};
pub use shard::{decode_video_at, ingest_shard, write_shard, ManifestEntry};

use crate::error::{CupidError, Result};

/// A video as a stack of clip embeddings, stored row-major (one row per clip).
#[derive(Debug, Clone, PartialEq)]
pub struct ClipMatrix {
    video_id: String,
    dim: usize,
    values: Vec<f32>,
}

impl ClipMatrix {
    pub fn new(video_id: impl Into<String>, dim: usize, values: Vec<f32>) -> Result<Self> {
        let video_id = video_id.into();
        if dim == 0 {
            return Err(CupidError::Schema(format!("video '{video_id}' has dim 0")));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(CupidError::data(
                video_id,
                format!("{} values is not a multiple of dim {dim}", values.len()),
            ));
        }
        if values.is_empty() {
            return Err(CupidError::data(video_id, "video has zero clips"));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(CupidError::data(
                video_id,
                format!("non-finite value at flat index {bad}"),
            ));
        }
        Ok(Self {
            video_id,
            dim,
            values,
        })
    }

    pub fn from_rows(video_id: impl Into<String>, rows: &[Vec<f32>]) -> Result<Self> {
        let video_id = video_id.into();
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(CupidError::Schema(format!("ragged clip rows in '{video_id}'")));
        }
        Self::new(video_id, dim, rows.concat())
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn clip_count(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn clip(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn clips(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim)
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f32) -> Result<Self> {
        Self::new(
            self.video_id.clone(),
            self.dim,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// Bitwise equality, distinguishing `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.video_id == other.video_id
            && self.dim == other.dim
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}
