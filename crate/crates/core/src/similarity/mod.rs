//! Clip-level video-pair similarity and the target × source kernel.
//!
//! A pair score compares every target clip with every source clip through a
//! raw dot product and pools the resulting `L × Q` grid: mean pooling takes
//! the grand mean of all entries, max pooling the largest entry. Sums run in
//! f64 and scores are emitted as f32.
//!
//! The kernel `K` has one row per target video and one column per source
//! video. [`build_similarity_matrix`] materializes it; [`stream_reduce`]
//! derives column means and per-row top-k without ever holding `K`.

mod dense;
mod dump;
mod stream;
mod topk;

pub use dense::{build_similarity_matrix, SimilarityView, TileConfig};
pub use dump::{read_column_means, read_dense, write_column_means, write_dense, ColumnMeanRecord};
pub use stream::{
    stream_column_means, stream_reduce, stream_row_topk, ColumnMeans, ReducerOutput, RowTopK,
};
pub use topk::{id_ranks, ScoredSource, TopK};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{CupidError, Result};
use crate::store::ClipMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMode {
    #[default]
    Mean,
    Max,
}

impl std::str::FromStr for PoolingMode {
    type Err = CupidError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(PoolingMode::Mean),
            "max" => Ok(PoolingMode::Max),
            other => Err(CupidError::Argument(format!("unknown pooling '{other}'"))),
        }
    }
}

/// Dot product with eight fixed-order partial sums.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// Total order on clip stacks, used only to pick a canonical loop
/// orientation so that mean pooling is exactly symmetric.
fn canonical_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Pair score on widened clip stacks (row-major, `dim` columns).
pub(crate) fn pair_score_f64(a: &[f64], b: &[f64], dim: usize, pooling: PoolingMode) -> f64 {
    let (outer, inner) = match canonical_cmp(a, b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    match pooling {
        PoolingMode::Mean => {
            let mut sum = 0.0;
            for x in outer.chunks_exact(dim) {
                for y in inner.chunks_exact(dim) {
                    sum += dot(x, y);
                }
            }
            let count = (outer.len() / dim) * (inner.len() / dim);
            sum / count as f64
        }
        PoolingMode::Max => {
            let mut best = f64::NEG_INFINITY;
            for x in outer.chunks_exact(dim) {
                for y in inner.chunks_exact(dim) {
                    best = best.max(dot(x, y));
                }
            }
            best
        }
    }
}

#[inline]
pub(crate) fn pair_score(a: &[f64], b: &[f64], dim: usize, pooling: PoolingMode) -> f32 {
    // `+ 0.0` folds -0.0 into +0.0 so numeric ties stay ties under total_cmp.
    pair_score_f64(a, b, dim, pooling) as f32 + 0.0
}

fn widen(m: &ClipMatrix) -> Vec<f64> {
    m.values().iter().map(|&v| v as f64).collect()
}

/// Similarity of one target video to one source video.
pub fn pair_similarity(target: &ClipMatrix, source: &ClipMatrix, pooling: PoolingMode) -> Result<f32> {
    if target.dim() != source.dim() {
        return Err(CupidError::Schema(format!(
            "dim mismatch: target '{}' has {}, source '{}' has {}",
            target.video_id(),
            target.dim(),
            source.video_id(),
            source.dim()
        )));
    }
    Ok(pair_score(&widen(target), &widen(source), target.dim(), pooling))
}
