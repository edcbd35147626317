use serde::{Deserialize, Serialize};

use super::dense::check_dims;
use super::topk::{id_ranks, ScoredSource, TopK};
use super::{pair_score, PoolingMode};
use crate::error::{CupidError, Result};
use crate::exec::{collect_results, Workers};
use crate::store::CorpusHandle;

/// Sources handled by one worker task.
const SOURCE_CHUNK: usize = 512;
const WAVE: usize = 32;

/// Average similarity of every source video to the whole target corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeans {
    pub source_ids: Vec<String>,
    pub means: Vec<f64>,
}

impl ColumnMeans {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// Per-target best sources, each list sorted best first.
pub type RowTopK = Vec<Vec<ScoredSource>>;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducerOutput {
    pub column_means: ColumnMeans,
    pub row_topk: Option<RowTopK>,
}

struct ChunkState {
    sums: Vec<f64>,
    heaps: Vec<TopK>,
}

/// Single pass over the source corpus computing column means and,
/// when `k` is given, per-row top-k.
///
/// Column entry `i` is the f64 sum of the f32 scores in target order,
/// divided by `P`, exactly as [`SimilarityView::column_means`] computes it.
///
/// [`SimilarityView::column_means`]: super::SimilarityView::column_means
pub fn stream_reduce(
    target: &CorpusHandle,
    source: &CorpusHandle,
    pooling: PoolingMode,
    k: Option<usize>,
    threads: usize,
) -> Result<ReducerOutput> {
    check_dims(target, source)?;
    if target.is_empty() {
        return Err(CupidError::Argument("target corpus is empty".into()));
    }
    if k == Some(0) {
        return Err(CupidError::Argument("k must be at least 1".into()));
    }
    let (p, n, dim) = (target.len(), source.len(), target.dim());
    let targets = target.load_all_f64()?;
    let source_ids: Vec<&str> = source.ids().collect();
    let ranks = id_ranks(&source_ids);
    let kk = k.map(|k| k.min(n));

    let workers = Workers::new(threads)?;
    let chunks = n.div_ceil(SOURCE_CHUNK);
    let mut means = Vec::with_capacity(n);
    let mut merged: Option<Vec<TopK>> = None;
    // Chunks run in waves so that at most WAVE sets of per-row heaps are
    // alive at once; waves and chunks are folded in index order.
    for wave in (0..chunks).step_by(WAVE) {
        let wave_len = WAVE.min(chunks - wave);
        let states = workers.map(wave_len, |w| -> Result<ChunkState> {
            let c = wave + w;
            let range = c * SOURCE_CHUNK..((c + 1) * SOURCE_CHUNK).min(n);
            let mut sums = Vec::with_capacity(range.len());
            let mut heaps: Vec<TopK> = match kk {
                Some(k) => (0..p).map(|_| TopK::new(k)).collect(),
                None => Vec::new(),
            };
            let mut buf = Vec::new();
            for i in range {
                source.record(i)?.extend_f64(&mut buf);
                let mut sum = 0.0f64;
                for (j, t) in targets.iter().enumerate() {
                    let s = pair_score(t, &buf, dim, pooling);
                    sum += s as f64;
                    if let Some(h) = heaps.get_mut(j) {
                        h.push(s, ranks[i], i as u32);
                    }
                }
                sums.push(sum);
            }
            Ok(ChunkState { sums, heaps })
        });
        for st in collect_results(states)? {
            means.extend(st.sums.into_iter().map(|s| s / p as f64));
            if kk.is_some() {
                match merged.as_mut() {
                    None => merged = Some(st.heaps),
                    Some(acc) => {
                        for (a, h) in acc.iter_mut().zip(st.heaps) {
                            a.merge(h);
                        }
                    }
                }
            }
        }
    }
    let row_topk = merged.map(|heaps| {
        heaps
            .into_iter()
            .map(|h| {
                h.into_sorted()
                    .into_iter()
                    .map(|(i, score)| ScoredSource {
                        source_id: source_ids[i as usize].to_owned(),
                        score,
                    })
                    .collect()
            })
            .collect()
    });
    Ok(ReducerOutput {
        column_means: ColumnMeans {
            source_ids: source_ids.into_iter().map(str::to_owned).collect(),
            means,
        },
        row_topk,
    })
}

pub fn stream_column_means(
    target: &CorpusHandle,
    source: &CorpusHandle,
    pooling: PoolingMode,
    threads: usize,
) -> Result<ColumnMeans> {
    Ok(stream_reduce(target, source, pooling, None, threads)?.column_means)
}

/// Per-target top-k sources. `k` larger than the source count is clamped.
pub fn stream_row_topk(
    target: &CorpusHandle,
    source: &CorpusHandle,
    pooling: PoolingMode,
    k: usize,
    threads: usize,
) -> Result<RowTopK> {
    if k < 1 {
        return Err(CupidError::Argument("k must be at least 1".into()));
    }
    Ok(stream_reduce(target, source, pooling, Some(k), threads)?
        .row_topk
        .unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{ClipMatrix, CorpusRole};

    fn corpus(role: CorpusRole, vids: &[(&str, [f32; 2])]) -> CorpusHandle {
        let v: Vec<ClipMatrix> = vids
            .iter()
            .map(|(id, x)| ClipMatrix::new(*id, 2, x.to_vec()).unwrap())
            .collect();
        CorpusHandle::from_videos("c", role, &v).unwrap()
    }

    #[test]
    fn orthogonal_pairs_give_half() {
        let t = corpus(CorpusRole::Target, &[("t1", [1.0, 0.0]), ("t2", [0.0, 1.0])]);
        let s = corpus(CorpusRole::Source, &[("s1", [1.0, 0.0]), ("s2", [0.0, 1.0])]);
        let m = stream_column_means(&t, &s, PoolingMode::Mean, 1).unwrap();
        assert_eq!(m.means, vec![0.5, 0.5]);
    }

    #[test]
    fn dominating_source_and_tie_rule() {
        let t = corpus(CorpusRole::Target, &[("t1", [1.0, 0.0]), ("t2", [1.0, 1.0])]);
        let s = corpus(
            CorpusRole::Source,
            &[("z", [0.1, 0.0]), ("best", [5.0, 5.0]), ("a", [0.0, 0.1])],
        );
        let top = stream_row_topk(&t, &s, PoolingMode::Mean, 1, 1).unwrap();
        assert!(top.iter().all(|r| r.len() == 1 && r[0].source_id == "best"));

        let tie = corpus(CorpusRole::Source, &[("y", [1.0, 0.0]), ("x", [1.0, 0.0])]);
        let top = stream_row_topk(&t, &tie, PoolingMode::Mean, 1, 1).unwrap();
        assert!(top.iter().all(|r| r[0].source_id == "x"));
    }

    #[test]
    fn argument_errors() {
        let t = corpus(CorpusRole::Target, &[("t1", [1.0, 0.0])]);
        let s = corpus(CorpusRole::Source, &[("s1", [1.0, 0.0])]);
        assert!(stream_row_topk(&t, &s, PoolingMode::Mean, 0, 1).is_err());
        assert_eq!(stream_row_topk(&t, &s, PoolingMode::Mean, 5, 1).unwrap()[0].len(), 1);
    }
}
