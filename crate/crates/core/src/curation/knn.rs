use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CurationConfig, CurationManifest, Strategy};
use crate::error::{CupidError, Result};
use crate::similarity::{stream_row_topk, PoolingMode, RowTopK, SimilarityView};
use crate::store::CorpusHandle;

/// Anything that can produce per-target top-k source lists.
///
/// Lists must be sorted best first with ties to the smaller id, so that the
/// top-k for a smaller k is always a prefix of the top-k for a larger one.
pub trait RowTopkProvider {
    fn source_count(&self) -> usize;
    fn row_count(&self) -> usize;
    fn row_topk(&self, k: usize) -> Result<RowTopK>;
}

impl RowTopkProvider for SimilarityView {
    fn source_count(&self) -> usize {
        self.cols()
    }

    fn row_count(&self) -> usize {
        self.rows()
    }

    fn row_topk(&self, k: usize) -> Result<RowTopK> {
        Ok(SimilarityView::row_topk(self, k))
    }
}

/// Streams top-k lists straight from two corpora.
pub struct StreamingTopk<'a> {
    pub target: &'a CorpusHandle,
    pub source: &'a CorpusHandle,
    pub pooling: PoolingMode,
    pub threads: usize,
}

impl RowTopkProvider for StreamingTopk<'_> {
    fn source_count(&self) -> usize {
        self.source.len()
    }

    fn row_count(&self) -> usize {
        self.target.len()
    }

    fn row_topk(&self, k: usize) -> Result<RowTopK> {
        stream_row_topk(self.target, self.source, self.pooling, k, self.threads)
    }
}

/// Candidate pool built from the union of per-row top-k lists.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnPool {
    /// Per-row depth at which the pool target was met.
    pub k: usize,
    /// Pool target, `round(expansion_factor * c)`.
    pub target_size: usize,
    /// `(id, best per-row score)`, best first, ties to the smaller id.
    pub entries: Vec<(String, f32)>,
}

/// Grows the per-row depth `k` from 1 until the deduplicated union of
/// per-row top-k reaches `round(expansion_factor * c)` ids, or `k` reaches
/// the source count.
pub fn knn_pool(provider: &dyn RowTopkProvider, c: usize, expansion_factor: f64) -> Result<KnnPool> {
    let n = provider.source_count();
    if c == 0 {
        return Err(CupidError::Argument("capacity must be at least 1".into()));
    }
    if c > n {
        return Err(CupidError::Capacity(format!("capacity {c} exceeds {n} sources")));
    }
    if !(2.0..=4.0).contains(&expansion_factor) {
        return Err(CupidError::Argument(format!(
            "expansion factor {expansion_factor} outside [2, 4]"
        )));
    }
    let target_size = (expansion_factor * c as f64).round() as usize;

    let mut best: HashMap<String, f32> = HashMap::new();
    let mut k = 0usize;
    let mut fetched = 0usize;
    let mut rows: RowTopK = Vec::new();
    'grow: while best.len() < target_size && k < n {
        if k == fetched {
            let want = if fetched == 0 {
                target_size.div_ceil(provider.row_count().max(1)).max(1)
            } else {
                fetched * 2
            };
            fetched = want.min(n);
            rows = provider.row_topk(fetched)?;
            if rows.is_empty() {
                break 'grow;
            }
        }
        k += 1;
        for row in &rows {
            if let Some(hit) = row.get(k - 1) {
                best.entry(hit.source_id.clone())
                    .and_modify(|s| *s = s.max(hit.score))
                    .or_insert(hit.score);
            }
        }
    }

    let mut entries: Vec<(String, f32)> = best.into_iter().collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(KnnPool {
        k,
        target_size,
        entries,
    })
}

/// Builds the pool, then draws `c` distinct ids uniformly with a ChaCha8
/// generator seeded by `seed`. Selected entries keep their pool order.
pub fn curate_knn(
    provider: &dyn RowTopkProvider,
    c: usize,
    expansion_factor: f64,
    seed: u64,
) -> Result<CurationManifest> {
    let pool = knn_pool(provider, c, expansion_factor)?;
    if pool.entries.len() < c {
        return Err(CupidError::Capacity(format!(
            "pool of {} ids is smaller than capacity {c}",
            pool.entries.len()
        )));
    }
    let mut picked: Vec<usize> = if pool.entries.len() == c {
        (0..c).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, pool.entries.len(), c).into_vec()
    };
    picked.sort_unstable();

    let mut config = CurationConfig::new(Strategy::Knn, c);
    config.expansion_factor = expansion_factor;
    config.seed = seed;
    Ok(CurationManifest::from_ranked(
        config,
        picked.into_iter().map(|i| {
            let (id, score) = &pool.entries[i];
            (id.clone(), Some(*score as f64))
        }),
    ))
}
