//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; errors surface as JS exceptions.

use std::collections::HashSet;

use cupid_core::curation::{curate_avg_sim, curate_knn, knn_pool, StreamingTopk, DEFAULT_EXPANSION_FACTOR};
use cupid_core::nce::{negative_set, nce_loss_grad, NegativeMode};
use cupid_core::probe::{rank_queries, summarize};
use cupid_core::similarity::{stream_reduce, PoolingMode};
use cupid_core::store::{CorpusHandle, CorpusRole};
use cupid_core::synth::{planted_cluster, random_grid, retrieval_instance, PlantedSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(js_err)
}

#[derive(Serialize)]
struct SourcePoint {
    id: String,
    avg_sim: f64,
    planted: bool,
    selected: bool,
}

#[derive(Serialize)]
struct CurationDemo {
    strategy: String,
    capacity: usize,
    planted_count: usize,
    recovered: usize,
    pool_size: Option<usize>,
    points: Vec<SourcePoint>,
}

/// Plants a cluster near the target centroid, curates `capacity` sources
/// with `strategy` ("avg_sim" or "knn"), and reports which were recovered.
#[wasm_bindgen]
pub fn curate_planted(
    source_count: usize,
    planted_fraction: f64,
    capacity: usize,
    strategy: &str,
    seed: u64,
) -> Result<String, JsValue> {
    let spec = PlantedSpec {
        source_count,
        planted_fraction,
        target_count: 20,
        ..PlantedSpec::default()
    };
    let pc = planted_cluster(spec, seed).map_err(js_err)?;
    let target = CorpusHandle::from_videos("target", CorpusRole::Target, &pc.target).map_err(js_err)?;
    let source = CorpusHandle::from_videos("source", CorpusRole::Source, &pc.source).map_err(js_err)?;
    let means = stream_reduce(&target, &source, PoolingMode::Mean, None, 1)
        .map_err(js_err)?
        .column_means;
    let (manifest, pool_size) = match strategy {
        "knn" => {
            let provider = StreamingTopk {
                target: &target,
                source: &source,
                pooling: PoolingMode::Mean,
                threads: 1,
            };
            let pool = knn_pool(&provider, capacity, DEFAULT_EXPANSION_FACTOR).map_err(js_err)?;
            let m = curate_knn(&provider, capacity, DEFAULT_EXPANSION_FACTOR, seed).map_err(js_err)?;
            (m, Some(pool.entries.len()))
        }
        _ => (curate_avg_sim(&means, capacity).map_err(js_err)?, None),
    };
    let selected: HashSet<&str> = manifest.ids().collect();
    let points: Vec<SourcePoint> = means
        .source_ids
        .iter()
        .zip(&means.means)
        .map(|(id, &avg_sim)| SourcePoint {
            id: id.clone(),
            avg_sim,
            planted: pc.planted.contains(id),
            selected: selected.contains(id.as_str()),
        })
        .collect();
    to_json(&CurationDemo {
        strategy: manifest.strategy.to_string(),
        capacity,
        planted_count: pc.planted.len(),
        recovered: points.iter().filter(|p| p.planted && p.selected).count(),
        pool_size,
        points,
    })
}

#[derive(Serialize)]
struct NceDemo {
    batch: usize,
    scores: Vec<f64>,
    negatives: Vec<(usize, usize)>,
    loss: f64,
    grad: Vec<f64>,
}

/// Random `batch × batch` score grid with the negative set of `anchor`
/// under `mode` ("standard" or "n_squared"), plus loss and gradient.
#[wasm_bindgen]
pub fn nce_grid(batch: usize, anchor: usize, mode: &str, seed: u64) -> Result<String, JsValue> {
    let mode = match mode {
        "n_squared" => NegativeMode::NSquared,
        _ => NegativeMode::Standard,
    };
    let grid = random_grid(batch, 1.0, seed).map_err(js_err)?;
    let negatives = negative_set(&grid, mode, anchor).map_err(js_err)?.into_iter().collect();
    let (loss, grad) = nce_loss_grad(&grid, mode);
    to_json(&NceDemo {
        batch,
        scores: grid.scores().to_vec(),
        negatives,
        loss,
        grad,
    })
}

#[derive(Serialize)]
struct ProbeDemo {
    recall: Vec<f64>,
    median_rank: usize,
}

/// Recall@k for every k from 1 to `candidates` on a synthetic retrieval
/// set whose queries are noisy copies of their candidates.
#[wasm_bindgen]
pub fn probe_curve(queries: usize, candidates: usize, dim: usize, noise: f64, seed: u64) -> Result<String, JsValue> {
    let (q, c, gt) = retrieval_instance(queries, candidates, dim, noise, seed);
    let ranks = rank_queries(&q, &c, dim, &gt).map_err(js_err)?;
    let ks: Vec<usize> = (1..=candidates).collect();
    let result = summarize(&ranks, &ks).map_err(js_err)?;
    to_json(&ProbeDemo {
        recall: result.recall_at.values().copied().collect(),
        median_rank: result.median_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exports_return_json() {
        let v: serde_json::Value = serde_json::from_str(&curate_planted(500, 0.1, 50, "avg_sim", 1).unwrap()).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 500);
        assert!(v["recovered"].as_u64().unwrap() >= 45);
        let v: serde_json::Value = serde_json::from_str(&curate_planted(500, 0.1, 50, "knn", 1).unwrap()).unwrap();
        assert_eq!(v["strategy"], "knn");
        let v: serde_json::Value = serde_json::from_str(&nce_grid(4, 0, "n_squared", 2).unwrap()).unwrap();
        assert_eq!(v["negatives"].as_array().unwrap().len(), 12);
        let v: serde_json::Value = serde_json::from_str(&probe_curve(20, 20, 8, 0.5, 3).unwrap()).unwrap();
        assert_eq!(v["recall"].as_array().unwrap().len(), 20);
    }
}
