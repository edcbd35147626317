//! Seeded synthetic corpora for tests, benchmarks, and demos.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::nce::ScoreGrid;
use crate::store::ClipMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| rng.sample::<f32, _>(StandardNormal)).collect()
}

fn normalize(v: &mut [f32]) {
    let norm = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x = (*x as f64 / norm) as f32);
    }
}

fn unit(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    let mut v = gaussian(rng, dim);
    normalize(&mut v);
    v
}

/// Unit vector orthogonal to the unit vector `axis`.
fn orthogonal_unit(rng: &mut impl Rng, axis: &[f32]) -> Vec<f32> {
    loop {
        let mut v = gaussian(rng, axis.len());
        let along: f64 = v.iter().zip(axis).map(|(a, b)| *a as f64 * *b as f64).sum();
        v.iter_mut()
            .zip(axis)
            .for_each(|(x, a)| *x = (*x as f64 - along * *a as f64) as f32);
        let norm: f64 = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        if norm > 1e-3 {
            normalize(&mut v);
            return v;
        }
    }
}

/// Unit vector at cosine `cos` from `axis`.
fn at_cosine(rng: &mut impl Rng, axis: &[f32], cos: f64) -> Vec<f32> {
    let w = orthogonal_unit(rng, axis);
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    let mut v: Vec<f32> = axis
        .iter()
        .zip(&w)
        .map(|(a, b)| (cos * *a as f64 + sin * *b as f64) as f32)
        .collect();
    normalize(&mut v);
    v
}

/// Videos with `1..=max_clips` Gaussian clips each, ids `{prefix}{i:06}`.
pub fn random_videos(prefix: &str, count: usize, max_clips: usize, dim: usize, seed: u64) -> Vec<ClipMatrix> {
    let mut rng = rng(seed);
    (0..count)
        .map(|i| {
            let clips = rng.random_range(1..=max_clips.max(1));
            let values = (0..clips).flat_map(|_| gaussian(&mut rng, dim)).collect();
            ClipMatrix::new(format!("{prefix}{i:06}"), dim, values).expect("finite gaussian clips")
        })
        .collect()
}

/// Source corpus with a planted fraction aligned to the target centroid.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub target: Vec<ClipMatrix>,
    pub source: Vec<ClipMatrix>,
    pub planted: HashSet<String>,
    /// Unit direction of the target clip centroid.
    pub centroid: Vec<f32>,
}

#[derive(Debug, Clone, Copy)]
pub struct PlantedSpec {
    pub source_count: usize,
    pub planted_fraction: f64,
    pub target_count: usize,
    pub max_clips: usize,
    pub dim: usize,
    /// Minimum cosine of planted clips to the centroid.
    pub planted_min_cos: f64,
    /// Background clips have `|cos| <= background_max_cos`.
    pub background_max_cos: f64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            source_count: 10_000,
            planted_fraction: 0.10,
            target_count: 50,
            max_clips: 8,
            dim: 32,
            planted_min_cos: 0.9,
            background_max_cos: 0.05,
        }
    }
}

/// Target clips cluster around a random axis; planted source clips sit at
/// cosine in `[planted_min_cos, 1]` from the exact target centroid and
/// background clips at `|cos| <= background_max_cos`. Planted ids are
/// spread uniformly at random through the source id range.
pub fn planted_cluster(spec: PlantedSpec, seed: u64) -> Result<PlantedCorpus> {
    let mut rng = rng(seed);
    let dim = spec.dim;
    let axis = unit(&mut rng, dim);
    let mut target = Vec::with_capacity(spec.target_count);
    let mut sum = vec![0.0f64; dim];
    for j in 0..spec.target_count {
        let clips = rng.random_range(1..=spec.max_clips);
        let mut values = Vec::with_capacity(clips * dim);
        for _ in 0..clips {
            let cos = rng.random_range(0.8..1.0);
            let v = at_cosine(&mut rng, &axis, cos);
            sum.iter_mut().zip(&v).for_each(|(s, x)| *s += *x as f64);
            values.extend(v);
        }
        target.push(ClipMatrix::new(format!("t{j:05}"), dim, values)?);
    }
    let mut centroid: Vec<f32> = sum.iter().map(|&s| s as f32).collect();
    normalize(&mut centroid);

    let planted_count = (spec.source_count as f64 * spec.planted_fraction).round() as usize;
    let mut order: Vec<usize> = (0..spec.source_count).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let planted_idx: HashSet<usize> = order[..planted_count].iter().copied().collect();

    let mut source = Vec::with_capacity(spec.source_count);
    let mut planted = HashSet::with_capacity(planted_count);
    for i in 0..spec.source_count {
        let id = format!("s{i:07}");
        let clips = rng.random_range(1..=spec.max_clips);
        let is_planted = planted_idx.contains(&i);
        let mut values = Vec::with_capacity(clips * dim);
        for _ in 0..clips {
            let cos = if is_planted {
                rng.random_range(spec.planted_min_cos..=1.0)
            } else {
                rng.random_range(-spec.background_max_cos..=spec.background_max_cos)
            };
            values.extend(at_cosine(&mut rng, &centroid, cos));
        }
        if is_planted {
            planted.insert(id.clone());
        }
        source.push(ClipMatrix::new(id, dim, values)?);
    }
    Ok(PlantedCorpus {
        target,
        source,
        planted,
        centroid,
    })
}

/// Score grid with standard-normal entries scaled by `scale`.
pub fn random_grid(batch: usize, scale: f64, seed: u64) -> Result<ScoreGrid> {
    let mut rng = rng(seed);
    let scores = (0..batch * batch)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect();
    ScoreGrid::new(batch, scores)
}

/// Retrieval instance: candidates are Gaussian, query `q` is candidate
/// `q % candidates` plus Gaussian noise of standard deviation `noise`.
/// Returns `(queries, candidates, ground_truth)` as flat row-major arrays.
pub fn retrieval_instance(
    queries: usize,
    candidates: usize,
    dim: usize,
    noise: f64,
    seed: u64,
) -> (Vec<f32>, Vec<f32>, Vec<usize>) {
    let mut rng = rng(seed);
    let cands: Vec<f32> = (0..candidates).flat_map(|_| unit(&mut rng, dim)).collect();
    let mut qs = Vec::with_capacity(queries * dim);
    let mut gt = Vec::with_capacity(queries);
    for q in 0..queries {
        let c = q % candidates;
        gt.push(c);
        for x in &cands[c * dim..(c + 1) * dim] {
            qs.push((*x as f64 + noise * rng.sample::<f64, _>(StandardNormal) / (dim as f64).sqrt()) as f32);
        }
    }
    (qs, cands, gt)
}
