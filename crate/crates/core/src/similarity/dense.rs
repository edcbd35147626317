use serde::{Deserialize, Serialize};

use super::topk::{id_ranks, ScoredSource};
use super::{pair_score, PoolingMode};
use crate::error::{CupidError, Result};
use crate::exec::{collect_results, Workers};
use crate::store::CorpusHandle;

/// Tile geometry, worker cap, and memory budget for kernel builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileConfig {
    pub tile_rows: usize,
    pub tile_cols: usize,
    /// 0 lets the runtime choose.
    pub threads: usize,
    /// Upper bound for a materialized kernel, in bytes.
    pub memory_budget_bytes: u64,
}

impl Default for TileConfig {
    fn default() -> Self {
        Self {
            tile_rows: 64,
            tile_cols: 256,
            threads: 0,
            memory_budget_bytes: 1 << 30,
        }
    }
}

impl TileConfig {
    fn validate(&self) -> Result<()> {
        if self.tile_rows == 0 || self.tile_cols == 0 {
            return Err(CupidError::Argument("tile sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Materialized `P × N` kernel, row-major (row = target, column = source).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityView {
    pub target_ids: Vec<String>,
    pub source_ids: Vec<String>,
    pub scores: Vec<f32>,
}

impl SimilarityView {
    pub fn rows(&self) -> usize {
        self.target_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.source_ids.len()
    }

    pub fn get(&self, target: usize, source: usize) -> f32 {
        self.scores[target * self.cols() + source]
    }

    pub fn row(&self, target: usize) -> &[f32] {
        let n = self.cols();
        &self.scores[target * n..(target + 1) * n]
    }

    /// Column means: each f32 entry widened and summed in row order, then
    /// divided by the row count.
    pub fn column_means(&self) -> Vec<f64> {
        let p = self.rows();
        (0..self.cols())
            .map(|i| {
                let mut sum = 0.0f64;
                for j in 0..p {
                    sum += self.get(j, i) as f64;
                }
                sum / p as f64
            })
            .collect()
    }

    /// Per-row top-k by full sort, ties to the smaller source id.
    pub fn row_topk(&self, k: usize) -> Vec<Vec<ScoredSource>> {
        let ranks = id_ranks(&self.source_ids);
        (0..self.rows())
            .map(|j| {
                let row = self.row(j);
                let mut order: Vec<usize> = (0..self.cols()).collect();
                order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(ranks[a].cmp(&ranks[b])));
                order
                    .into_iter()
                    .take(k)
                    .map(|i| ScoredSource {
                        source_id: self.source_ids[i].clone(),
                        score: row[i],
                    })
                    .collect()
            })
            .collect()
    }
}

pub(crate) fn check_dims(target: &CorpusHandle, source: &CorpusHandle) -> Result<()> {
    if target.dim() != source.dim() {
        return Err(CupidError::Schema(format!(
            "target corpus dim {} differs from source corpus dim {}",
            target.dim(),
            source.dim()
        )));
    }
    Ok(())
}

/// Materializes the full kernel.
///
/// Every entry is an independent pair score, and tiles are placed back in
/// index order, so the result is identical for any tile geometry or worker
/// count.
pub fn build_similarity_matrix(
    target: &CorpusHandle,
    source: &CorpusHandle,
    pooling: PoolingMode,
    tile: TileConfig,
) -> Result<SimilarityView> {
    check_dims(target, source)?;
    tile.validate()?;
    let (p, n) = (target.len(), source.len());
    let bytes = (p as u64) * (n as u64) * 4;
    if bytes > tile.memory_budget_bytes {
        return Err(CupidError::Capacity(format!(
            "dense {p}x{n} kernel needs {bytes} bytes, budget is {}; use the streaming reducers",
            tile.memory_budget_bytes
        )));
    }
    let dim = target.dim();
    let targets = target.load_all_f64()?;

    let row_tiles = p.div_ceil(tile.tile_rows);
    let col_tiles = n.div_ceil(tile.tile_cols);
    let workers = Workers::new(tile.threads)?;
    let tiles = workers.map(row_tiles * col_tiles, |t| -> Result<Vec<f32>> {
        let (rt, ct) = (t / col_tiles, t % col_tiles);
        let rows = rt * tile.tile_rows..((rt + 1) * tile.tile_rows).min(p);
        let cols = ct * tile.tile_cols..((ct + 1) * tile.tile_cols).min(n);
        let mut out = vec![0.0f32; rows.len() * cols.len()];
        let mut buf = Vec::new();
        for (ci, i) in cols.clone().enumerate() {
            source.record(i)?.extend_f64(&mut buf);
            for (ri, j) in rows.clone().enumerate() {
                out[ri * cols.len() + ci] = pair_score(&targets[j], &buf, dim, pooling);
            }
        }
        Ok(out)
    });
    let tiles = collect_results(tiles)?;

    let mut scores = vec![0.0f32; p * n];
    for (t, block) in tiles.into_iter().enumerate() {
        let (rt, ct) = (t / col_tiles, t % col_tiles);
        let row0 = rt * tile.tile_rows;
        let col0 = ct * tile.tile_cols;
        let width = ((ct + 1) * tile.tile_cols).min(n) - col0;
        for (ri, chunk) in block.chunks_exact(width).enumerate() {
            let start = (row0 + ri) * n + col0;
            scores[start..start + width].copy_from_slice(chunk);
        }
    }
    Ok(SimilarityView {
        target_ids: target.ids().map(str::to_owned).collect(),
        source_ids: source.ids().map(str::to_owned).collect(),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{ClipMatrix, CorpusRole};

    fn unit(id: &str, v: [f32; 2]) -> ClipMatrix {
        ClipMatrix::new(id, 2, v.to_vec()).unwrap()
    }

    #[test]
    fn one_by_one() {
        let t = CorpusHandle::from_videos("t", CorpusRole::Target, &[unit("a", [1.0, 0.0])]).unwrap();
        let s = CorpusHandle::from_videos("s", CorpusRole::Source, &[unit("b", [1.0, 0.0])]).unwrap();
        let k = build_similarity_matrix(&t, &s, PoolingMode::Mean, TileConfig::default()).unwrap();
        assert_eq!(k.scores, vec![1.0]);
    }

    #[test]
    fn budget_exceeded_is_capacity_error() {
        let t = CorpusHandle::from_videos("t", CorpusRole::Target, &[unit("a", [1.0, 0.0])]).unwrap();
        let s = CorpusHandle::from_videos(
            "s",
            CorpusRole::Source,
            &[unit("b", [1.0, 0.0]), unit("c", [0.0, 1.0])],
        )
        .unwrap();
        let tile = TileConfig {
            memory_budget_bytes: 4,
            ..TileConfig::default()
        };
        assert!(matches!(
            build_similarity_matrix(&t, &s, PoolingMode::Mean, tile),
            Err(CupidError::Capacity(_))
        ));
    }

    #[test]
    fn dim_mismatch_is_schema_error() {
        let t = CorpusHandle::from_videos("t", CorpusRole::Target, &[unit("a", [1.0, 0.0])]).unwrap();
        let s = CorpusHandle::from_videos(
            "s",
            CorpusRole::Source,
            &[ClipMatrix::new("b", 3, vec![1.0, 0.0, 0.0]).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            build_similarity_matrix(&t, &s, PoolingMode::Mean, TileConfig::default()),
            Err(CupidError::Schema(_))
        ));
    }
}
