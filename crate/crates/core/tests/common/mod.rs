//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the library's scoring or selection code.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use cupid_core::similarity::{PoolingMode, SimilarityView};
use cupid_core::store::{ClipMatrix, CorpusHandle, CorpusRole};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Plain left-to-right dot product.
pub fn naive_dot(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        s += *x as f64 * *y as f64;
    }
    s
}

pub fn naive_pair(target: &ClipMatrix, source: &ClipMatrix, pooling: PoolingMode) -> f64 {
    let mut all = Vec::new();
    for t in target.clips() {
        for s in source.clips() {
            all.push(naive_dot(t, s));
        }
    }
    match pooling {
        PoolingMode::Mean => all.iter().sum::<f64>() / all.len() as f64,
        PoolingMode::Max => all.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Row-major `P × N` reference kernel.
pub fn naive_kernel(targets: &[ClipMatrix], sources: &[ClipMatrix], pooling: PoolingMode) -> Vec<f64> {
    let mut k = Vec::with_capacity(targets.len() * sources.len());
    for t in targets {
        for s in sources {
            k.push(naive_pair(t, s, pooling));
        }
    }
    k
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

/// Column means of a materialized kernel: f64 sum in target order over P.
pub fn dense_column_means(view: &SimilarityView) -> Vec<f64> {
    let (p, n) = (view.target_ids.len(), view.source_ids.len());
    (0..n)
        .map(|i| {
            let mut s = 0.0f64;
            for j in 0..p {
                s += view.scores[j * n + i] as f64;
            }
            s / p as f64
        })
        .collect()
}

/// Full sort of one kernel row: `(source_id, score)` best first, ties by id.
pub fn full_sort_row(view: &SimilarityView, row: usize) -> Vec<(String, f32)> {
    let n = view.source_ids.len();
    let mut pairs: Vec<(String, f32)> = (0..n)
        .map(|i| (view.source_ids[i].clone(), view.scores[row * n + i]))
        .collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    pairs
}

/// Top-c ids by column mean, ties to the smaller id, by full sort.
pub fn oracle_avg_sim(ids: &[String], means: &[f64], c: usize) -> Vec<String> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then_with(|| ids[a].cmp(&ids[b])));
    order.into_iter().take(c).map(|i| ids[i].clone()).collect()
}

/// Smallest per-row depth whose union of top lists reaches
/// `round(factor * c)` ids (or N), with each id's best score.
pub fn oracle_knn_pool(view: &SimilarityView, c: usize, factor: f64) -> (usize, Vec<(String, f32)>) {
    let n = view.source_ids.len();
    let target = (factor * c as f64).round() as usize;
    let rows: Vec<Vec<(String, f32)>> = (0..view.target_ids.len()).map(|j| full_sort_row(view, j)).collect();
    let mut k = 0;
    let mut union: HashMap<String, f32> = HashMap::new();
    loop {
        if union.len() >= target || k >= n {
            break;
        }
        k += 1;
        union.clear();
        for row in &rows {
            for (id, s) in &row[..k] {
                let e = union.entry(id.clone()).or_insert(*s);
                if *s > *e {
                    *e = *s;
                }
            }
        }
    }
    let mut pool: Vec<(String, f32)> = union.into_iter().collect();
    pool.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    (k, pool)
}

/// Rank by full sort: ground truth placed ahead of candidates with an
/// equal score.
pub fn full_sort_rank(query: &[f32], candidates: &[Vec<f32>], gt: usize) -> usize {
    let scores: Vec<f64> = candidates.iter().map(|c| naive_dot(query, c)).collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| (b == gt).cmp(&(a == gt)))
    });
    order.iter().position(|&i| i == gt).unwrap() + 1
}

pub fn id_set<'a>(ids: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    ids.into_iter().map(str::to_owned).collect()
}

/// Video with `clips` rows; integer-valued entries in {-1, 0, 1} when
/// `coarse`, which makes exact score ties common.
pub fn random_video(rng: &mut ChaCha8Rng, id: String, clips: usize, dim: usize, coarse: bool) -> ClipMatrix {
    let values = (0..clips * dim)
        .map(|_| {
            if coarse {
                rng.random_range(-1i32..=1) as f32
            } else {
                rng.random_range(-1.0f32..1.0)
            }
        })
        .collect();
    ClipMatrix::new(id, dim, values).unwrap()
}

/// Random corpus of `count` videos with ids `{prefix}{i:04}` stored in
/// shuffled order, so manifest position and id order disagree.
pub fn random_corpus(
    rng: &mut ChaCha8Rng,
    prefix: &str,
    count: usize,
    max_clips: usize,
    dim: usize,
    coarse: bool,
) -> Vec<ClipMatrix> {
    let mut videos: Vec<ClipMatrix> = (0..count)
        .map(|i| {
            let clips = rng.random_range(1..=max_clips);
            random_video(rng, format!("{prefix}{i:04}"), clips, dim, coarse)
        })
        .collect();
    videos.shuffle(rng);
    videos
}

pub struct Instance {
    pub targets: Vec<ClipMatrix>,
    pub sources: Vec<ClipMatrix>,
}

impl Instance {
    /// N ≤ `max_n`, P ≤ `max_p`, clips ≤ 8, d ≤ 16.
    pub fn random(seed: u64, max_p: usize, max_n: usize) -> Self {
        let mut r = rng(seed);
        let dim = r.random_range(1..=16);
        let p = r.random_range(1..=max_p);
        let n = r.random_range(1..=max_n);
        let coarse = r.random_bool(0.5);
        let dim = if coarse { dim.min(4) } else { dim };
        Self {
            targets: random_corpus(&mut r, "t", p, 8, dim, coarse),
            sources: random_corpus(&mut r, "s", n, 8, dim, coarse),
        }
    }

    pub fn handles(&self) -> (CorpusHandle, CorpusHandle) {
        (
            CorpusHandle::from_videos("target", CorpusRole::Target, &self.targets).unwrap(),
            CorpusHandle::from_videos("source", CorpusRole::Source, &self.sources).unwrap(),
        )
    }
}
