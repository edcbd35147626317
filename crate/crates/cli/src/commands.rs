//! Per-command implementations. Each returns the files to publish; nothing
//! touches the output paths here.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use cupid_core::curation::{
    build_incremental_schedule, curate_avg_sim, curate_heuristic, curate_knn, exclude_overlap,
    manifest_sidecar, manifest_to_jsonl, read_manifest, split_steps, validate_stage_sizes,
    vocabulary_from_titles, write_schedule, CurationManifest, HeuristicRules, ManifestSidecar,
    ScheduleRecord, StreamingTopk, Strategy, DEFAULT_CAPACITY, DEFAULT_EXPANSION_FACTOR,
};
use cupid_core::nce::NegativeMode;
use cupid_core::similarity::{
    build_similarity_matrix, read_column_means, stream_column_means, write_column_means,
    write_dense, ColumnMeans, PoolingMode, TileConfig,
};
use cupid_core::store::{ingest_shard, read_metadata, write_shard, ClipMatrix, CorpusHandle, CorpusRole, ShardBytes, SubtitleSource, VideoMeta};
use cupid_core::{jsonl, nce, probe, synth, CupidError};
use log::info;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Command, RunConfig};
use crate::{CliError, Outputs};

/// Step for the finite-difference gradient check.
pub const NCE_CHECK_STEP: f64 = 1e-5;
pub const NCE_CHECK_TOLERANCE: f64 = 1e-4;

pub fn execute(cfg: &RunConfig) -> Result<Outputs, CliError> {
    info!("running {:?}", cfg.command);
    match cfg.command {
        Command::Ingest => ingest(cfg),
        Command::Similarity => similarity(cfg),
        Command::Curate => curate(cfg),
        Command::Schedule => schedule(cfg),
        Command::Probe => run_probe(cfg),
        Command::NceCheck => nce_check(cfg),
        Command::Stats => stats(cfg),
        Command::Synth => run_synth(cfg),
    }
}

fn pooling(cfg: &RunConfig) -> Result<PoolingMode, CliError> {
    match &cfg.opts.pooling {
        Some(p) => p.parse().map_err(|e: CupidError| CliError::Usage(e.to_string())),
        None => Ok(PoolingMode::Mean),
    }
}

fn threads(cfg: &RunConfig) -> usize {
    cfg.opts.threads.unwrap_or(0)
}

fn tile_config(cfg: &RunConfig) -> TileConfig {
    let mut tile = TileConfig {
        threads: threads(cfg),
        ..TileConfig::default()
    };
    if let Some(r) = cfg.opts.tile_rows {
        tile.tile_rows = r;
    }
    if let Some(c) = cfg.opts.tile_cols {
        tile.tile_cols = c;
    }
    if let Some(mb) = cfg.opts.memory_budget_mb {
        tile.memory_budget_bytes = mb.saturating_mul(1 << 20);
    }
    tile
}

/// `<path><suffix>` without touching the extension.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Sidecar written next to a curation manifest.
pub fn sidecar_path(manifest: &Path) -> PathBuf {
    with_suffix(manifest, ".meta.json")
}

fn open_file(path: &Path) -> Result<BufReader<std::fs::File>, CliError> {
    std::fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Core(CupidError::NotFound(format!("{}: {e}", path.display()))))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(CupidError::from)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn open_corpus(path: &Path, role: CorpusRole, out: &mut Outputs) -> Result<CorpusHandle, CliError> {
    let id = match role {
        CorpusRole::Source => "source",
        CorpusRole::Target => "target",
    };
    let handle = CorpusHandle::open_manifest(path, id, role)?;
    out.input(path);
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut seen = HashSet::new();
    for e in handle.manifest() {
        if seen.insert(e.shard.as_str()) {
            out.input(&base.join(&e.shard));
        }
    }
    info!("{id} corpus: {} videos, {} clips, dim {}", handle.len(), handle.total_clips(), handle.dim());
    Ok(handle)
}

/// Shard reference as stored in a manifest: relative to the manifest's
/// directory when the shard lives beneath it, absolute otherwise.
fn shard_reference(shard: &Path, manifest: &Path) -> Result<String, CliError> {
    let shard_abs = std::fs::canonicalize(shard)?;
    let dir = match manifest.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    if let Ok(dir_abs) = std::fs::canonicalize(&dir) {
        if let Ok(rel) = shard_abs.strip_prefix(&dir_abs) {
            return Ok(rel.to_string_lossy().into_owned());
        }
    }
    Ok(shard_abs.to_string_lossy().into_owned())
}

fn ingest(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let o = &cfg.opts;
    let dim = o.dim.expect("validated");
    let out_path = cfg.out();
    let mut out = Outputs::default();
    let mut shards = Vec::new();
    for path in o.shards.as_deref().unwrap_or_default() {
        let name = shard_reference(path, out_path)?;
        let bytes = ShardBytes::map_file(path)?;
        out.input(path);
        shards.push((name, bytes));
    }
    let handle = CorpusHandle::from_shards("ingest", CorpusRole::Source, dim, shards)?;
    out.file(out_path, jsonl::to_jsonl_bytes(handle.manifest())?);
    out.summary = json!({
        "video_count": handle.len(),
        "total_clips": handle.total_clips(),
        "dim": dim,
        "shard_count": o.shards.as_ref().map_or(0, Vec::len),
    });
    Ok(out)
}

fn summarize_means(means: &ColumnMeans) -> serde_json::Value {
    let min = means.means.iter().copied().fold(f64::INFINITY, f64::min);
    let max = means.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({ "source_count": means.len(), "min_avg_sim": min, "max_avg_sim": max })
}

fn similarity(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let o = &cfg.opts;
    let pooling = pooling(cfg)?;
    let mut out = Outputs::default();
    let target = open_corpus(o.target_manifest.as_deref().expect("validated"), CorpusRole::Target, &mut out)?;
    let source = open_corpus(o.source_manifest.as_deref().expect("validated"), CorpusRole::Source, &mut out)?;
    let means = match &o.dense_out {
        Some(dense_path) => {
            let view = build_similarity_matrix(&target, &source, pooling, tile_config(cfg))?;
            out.file(dense_path, write_dense(&view));
            ColumnMeans {
                means: view.column_means(),
                source_ids: view.source_ids,
            }
        }
        None => stream_column_means(&target, &source, pooling, threads(cfg))?,
    };
    out.file(cfg.out(), write_column_means(&means)?);
    let mut summary = summarize_means(&means);
    summary["target_count"] = json!(target.len());
    summary["pooling"] = json!(pooling);
    out.summary = summary;
    Ok(out)
}

/// One id per line; blank lines and surrounding whitespace are ignored.
pub fn read_id_list(path: &Path) -> Result<HashSet<String>, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

fn curate(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let o = &cfg.opts;
    let strategy: Strategy = cfg.strategy()?.parse()?;
    let capacity = o.capacity.unwrap_or(DEFAULT_CAPACITY);
    let pooling = pooling(cfg)?;
    let mut out = Outputs::default();

    let mut manifest = match strategy {
        Strategy::AvgSim => {
            let means = match &o.column_means {
                Some(path) => {
                    out.input(path);
                    read_column_means(open_file(path)?)?
                }
                None => {
                    let target =
                        open_corpus(o.target_manifest.as_deref().expect("validated"), CorpusRole::Target, &mut out)?;
                    let source =
                        open_corpus(o.source_manifest.as_deref().expect("validated"), CorpusRole::Source, &mut out)?;
                    stream_column_means(&target, &source, pooling, threads(cfg))?
                }
            };
            let mut m = curate_avg_sim(&means, capacity)?;
            m.config_echo.pooling = pooling;
            m
        }
        Strategy::Knn => {
            let target = open_corpus(o.target_manifest.as_deref().expect("validated"), CorpusRole::Target, &mut out)?;
            let source = open_corpus(o.source_manifest.as_deref().expect("validated"), CorpusRole::Source, &mut out)?;
            let provider = StreamingTopk {
                target: &target,
                source: &source,
                pooling,
                threads: threads(cfg),
            };
            let factor = o.expansion_factor.unwrap_or(DEFAULT_EXPANSION_FACTOR);
            let mut m = curate_knn(&provider, capacity, factor, o.seed.unwrap_or(0))?;
            m.config_echo.pooling = pooling;
            m
        }
        Strategy::Heuristic => {
            let meta_path = o.metadata.as_deref().expect("validated");
            out.input(meta_path);
            let metadata = read_metadata(open_file(meta_path)?)?;
            let mut vocabulary: Vec<String> = o.vocabulary.clone().unwrap_or_default();
            if let Some(path) = &o.target_metadata {
                out.input(path);
                let targets = read_metadata(open_file(path)?)?;
                vocabulary.extend(vocabulary_from_titles(targets.iter().map(|m| m.title.as_str())));
            }
            let rules = HeuristicRules::new(
                o.categories.clone().unwrap_or_default(),
                vocabulary,
                o.require_human_subtitles.unwrap_or(false),
                o.cap,
            )?;
            curate_heuristic(metadata, &rules)?
        }
    };

    if let Some(path) = &o.exclude_ids {
        out.input(path);
        let downstream = read_id_list(path)?;
        manifest = exclude_overlap(&manifest, &downstream);
    }
    manifest.validate()?;
    info!("curated {} videos with {strategy}", manifest.len());

    out.file(cfg.out(), manifest_to_jsonl(&manifest)?);
    out.file(sidecar_path(cfg.out()), json_bytes(&manifest_sidecar(&manifest))?);
    out.summary = json!({
        "strategy": strategy,
        "count": manifest.len(),
        "excluded_count": manifest.excluded_count,
    });
    Ok(out)
}

/// Reads a curation manifest together with its sidecar.
pub fn load_manifest(path: &Path, out: Option<&mut Outputs>) -> Result<CurationManifest, CliError> {
    let side_path = sidecar_path(path);
    let sidecar: ManifestSidecar = serde_json::from_reader(open_file(&side_path)?)
        .map_err(|e| CupidError::Format(format!("{}: {e}", side_path.display())))?;
    let manifest = read_manifest(open_file(path)?, &sidecar)?;
    if let Some(out) = out {
        out.input(path);
        out.input(&side_path);
    }
    Ok(manifest)
}

fn schedule(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let o = &cfg.opts;
    let total = o.steps.expect("validated");
    let mut out = Outputs::default();
    let records: Vec<ScheduleRecord> = match (&o.manifests, &o.sizes) {
        (Some(paths), _) => {
            let manifests = paths
                .iter()
                .map(|p| load_manifest(p, Some(&mut out)))
                .collect::<Result<Vec<_>, _>>()?;
            let plan = build_incremental_schedule(manifests, total)?;
            plan.stages
                .iter()
                .zip(paths)
                .enumerate()
                .map(|(i, (stage, path))| ScheduleRecord {
                    stage: i + 1,
                    manifest_path: Some(path.to_string_lossy().into_owned()),
                    steps: stage.steps,
                    size: stage.manifest.len(),
                })
                .collect()
        }
        (None, Some(sizes)) => {
            validate_stage_sizes(sizes)?;
            let steps = split_steps(sizes.len(), total)?;
            let ranking = match &o.ranking {
                Some(path) => Some(load_manifest(path, Some(&mut out))?),
                None => None,
            };
            if let Some(r) = &ranking {
                if r.len() < sizes[0] {
                    return Err(CupidError::Capacity(format!(
                        "ranking holds {} videos, first stage needs {}",
                        r.len(),
                        sizes[0]
                    ))
                    .into());
                }
            }
            let mut records = Vec::with_capacity(sizes.len());
            for (i, (&size, &steps)) in sizes.iter().zip(&steps).enumerate() {
                let manifest_path = match &ranking {
                    Some(r) => {
                        let path = with_suffix(cfg.out(), &format!(".stage{}.jsonl", i + 1));
                        let stage = r.truncated(size);
                        out.file(&path, manifest_to_jsonl(&stage)?);
                        out.file(sidecar_path(&path), json_bytes(&manifest_sidecar(&stage))?);
                        Some(path.to_string_lossy().into_owned())
                    }
                    None => None,
                };
                records.push(ScheduleRecord {
                    stage: i + 1,
                    manifest_path,
                    steps,
                    size,
                });
            }
            records
        }
        (None, None) => unreachable!("validated"),
    };
    out.file(cfg.out(), write_schedule(&records)?);
    out.summary = json!({
        "stages": records.len(),
        "sizes": records.iter().map(|r| r.size).collect::<Vec<_>>(),
        "steps": records.iter().map(|r| r.steps).collect::<Vec<_>>(),
    });
    Ok(out)
}

/// Probe query line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub embedding: Vec<f32>,
    /// `candidate_id` of the matching candidate.
    pub ground_truth: String,
}

/// Probe candidate line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub candidate_id: String,
    pub embedding: Vec<f32>,
}

fn flatten(rows: impl Iterator<Item = (String, Vec<f32>)>, dim: &mut Option<usize>) -> Result<Vec<f32>, CliError> {
    let mut flat = Vec::new();
    for (id, row) in rows {
        match *dim {
            None => *dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(CupidError::Schema(format!("'{id}' has dim {}, expected {d}", row.len())).into())
            }
            _ => {}
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(CupidError::data(&id, "non-finite embedding value").into());
        }
        flat.extend(row);
    }
    Ok(flat)
}

fn run_probe(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let o = &cfg.opts;
    let mut out = Outputs::default();
    let q_path = o.queries.as_deref().expect("validated");
    let c_path = o.candidates.as_deref().expect("validated");
    out.input(q_path);
    out.input(c_path);
    let queries: Vec<QueryRecord> = jsonl::read_jsonl(open_file(q_path)?)?;
    let candidates: Vec<CandidateRecord> = jsonl::read_jsonl(open_file(c_path)?)?;
    if queries.is_empty() {
        return Err(CupidError::Argument("no queries".into()).into());
    }
    let mut index = HashMap::with_capacity(candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        if index.insert(c.candidate_id.as_str(), i).is_some() {
            return Err(CupidError::data(&c.candidate_id, "duplicate candidate id").into());
        }
    }
    let ground_truth = queries
        .iter()
        .map(|q| {
            index
                .get(q.ground_truth.as_str())
                .copied()
                .ok_or_else(|| CupidError::data(&q.query_id, format!("unknown ground truth '{}'", q.ground_truth)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut dim = None;
    let c_flat = flatten(candidates.iter().map(|c| (c.candidate_id.clone(), c.embedding.clone())), &mut dim)?;
    let q_flat = flatten(queries.iter().map(|q| (q.query_id.clone(), q.embedding.clone())), &mut dim)?;
    let dim = dim.unwrap_or(0);
    let ranks = probe::rank_queries(&q_flat, &c_flat, dim, &ground_truth)?;
    let ks = o.ks.clone().unwrap_or_else(|| vec![1, 5, 10]);
    let result = probe::summarize(&ranks, &ks)?;
    let report = result.report(candidates.len());
    out.file(cfg.out(), json_bytes(&report)?);
    out.summary = serde_json::to_value(&report).map_err(CupidError::from)?;
    Ok(out)
}

fn nce_check(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let o = &cfg.opts;
    let batch = o.batch.unwrap_or(4);
    let seed = o.seed.unwrap_or(0);
    let scale = o.scale.unwrap_or(1.0);
    let grid = synth::random_grid(batch, scale, seed)?;
    let checks = [NegativeMode::Standard, NegativeMode::NSquared]
        .into_iter()
        .map(|mode| nce::gradient_check(&grid, mode, NCE_CHECK_STEP))
        .collect::<Result<Vec<_>, _>>()?;
    let max_rel = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    let report = json!({
        "batch": batch,
        "seed": seed,
        "scale": scale,
        "step": NCE_CHECK_STEP,
        "tolerance": NCE_CHECK_TOLERANCE,
        "checks": checks,
        "max_rel_error": max_rel,
        "passed": max_rel < NCE_CHECK_TOLERANCE,
    });
    out_json(cfg, report)
}

fn out_json(cfg: &RunConfig, report: serde_json::Value) -> Result<Outputs, CliError> {
    let mut out = Outputs::default();
    out.file(cfg.out(), json_bytes(&report)?);
    out.summary = report;
    Ok(out)
}

fn corpus_stats(handle: &CorpusHandle) -> serde_json::Value {
    let counts: Vec<u32> = handle.manifest().iter().map(|e| e.clip_count).collect();
    let shards: HashSet<&str> = handle.manifest().iter().map(|e| e.shard.as_str()).collect();
    let mut histogram: BTreeMap<u32, usize> = BTreeMap::new();
    for &c in &counts {
        *histogram.entry(c).or_default() += 1;
    }
    json!({
        "video_count": handle.len(),
        "total_clips": handle.total_clips(),
        "dim": handle.dim(),
        "shard_count": shards.len(),
        "min_clips": counts.iter().min(),
        "max_clips": counts.iter().max(),
        "mean_clips": handle.total_clips() as f64 / handle.len() as f64,
        "clip_histogram": histogram,
    })
}

fn stats(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let o = &cfg.opts;
    let mut out = Outputs::default();
    let mut report = serde_json::Map::new();
    if let Some(path) = &o.source_manifest {
        let h = open_corpus(path, CorpusRole::Source, &mut out)?;
        report.insert("source".into(), corpus_stats(&h));
    }
    if let Some(path) = &o.target_manifest {
        let h = open_corpus(path, CorpusRole::Target, &mut out)?;
        report.insert("target".into(), corpus_stats(&h));
    }
    let report = serde_json::Value::Object(report);
    out.file(cfg.out(), json_bytes(&report)?);
    out.summary = report;
    Ok(out)
}

const PLANTED_CATEGORY: &str = "Food and Entertaining";
const BACKGROUND_CATEGORIES: [&str; 4] = ["Sports and Fitness", "Cars & Other Vehicles", "Hobbies and Crafts", "Pets and Animals"];
const PLANTED_WORDS: [&str; 6] = ["pasta", "recipe", "cook", "kitchen", "sauce", "bake"];
const BACKGROUND_WORDS: [&str; 6] = ["engine", "knit", "puppy", "garden", "bike", "paint"];

fn synth_metadata(videos: &[ClipMatrix], planted: &HashSet<String>, seed: u64) -> Vec<VideoMeta> {
    let mut rng = synth::rng(seed ^ 0x6d65_7461);
    videos
        .iter()
        .map(|v| {
            let is_planted = planted.contains(v.video_id());
            let (category, words) = if is_planted {
                (PLANTED_CATEGORY, &PLANTED_WORDS)
            } else {
                (BACKGROUND_CATEGORIES[rng.random_range(0..BACKGROUND_CATEGORIES.len())], &BACKGROUND_WORDS)
            };
            let title = format!(
                "How to {} {}",
                words[rng.random_range(0..words.len())],
                words[rng.random_range(0..words.len())]
            );
            let subtitle_source = match rng.random_range(0..3) {
                0 => SubtitleSource::Human,
                1 => SubtitleSource::Asr,
                _ => SubtitleSource::None,
            };
            VideoMeta {
                video_id: v.video_id().to_owned(),
                category: category.to_owned(),
                title,
                subtitle_source,
                duration_s: 30.0 * v.clip_count() as f64,
            }
        })
        .collect()
}

fn add_corpus(out: &mut Outputs, dir: &Path, name: &str, videos: &[ClipMatrix], dim: usize) -> Result<(), CliError> {
    let shard_name = format!("{name}.cpde");
    let bytes = write_shard(videos)?;
    let entries = ingest_shard(&bytes, dim, &shard_name)?;
    out.file(dir.join(&shard_name), bytes);
    out.file(dir.join(format!("{name}.manifest.jsonl")), jsonl::to_jsonl_bytes(&entries)?);
    Ok(())
}

fn run_synth(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let o = &cfg.opts;
    let dir = cfg.out();
    let seed = o.seed.unwrap_or(0);
    let defaults = synth::PlantedSpec::default();
    let spec = synth::PlantedSpec {
        source_count: o.source_count.unwrap_or(defaults.source_count),
        target_count: o.target_count.unwrap_or(defaults.target_count),
        max_clips: o.max_clips.unwrap_or(defaults.max_clips),
        dim: o.dim.unwrap_or(defaults.dim),
        planted_fraction: o.planted_fraction.unwrap_or(defaults.planted_fraction),
        ..defaults
    };
    let kind = o.kind.as_deref().unwrap_or("planted");
    let (target, source, planted) = if kind == "random" {
        (
            synth::random_videos("t", spec.target_count, spec.max_clips, spec.dim, seed),
            synth::random_videos("s", spec.source_count, spec.max_clips, spec.dim, seed.wrapping_add(1)),
            HashSet::new(),
        )
    } else {
        let pc = synth::planted_cluster(spec, seed)?;
        (pc.target, pc.source, pc.planted)
    };
    let mut out = Outputs::default();
    add_corpus(&mut out, dir, "source", &source, spec.dim)?;
    add_corpus(&mut out, dir, "target", &target, spec.dim)?;
    let metadata = synth_metadata(&source, &planted, seed);
    out.file(dir.join("metadata.jsonl"), jsonl::to_jsonl_bytes(&metadata)?);
    let mut planted_ids: Vec<&String> = planted.iter().collect();
    planted_ids.sort_unstable();
    let mut planted_text = String::new();
    for id in &planted_ids {
        planted_text.push_str(id);
        planted_text.push('\n');
    }
    out.file(dir.join("planted.txt"), planted_text.into_bytes());
    out.summary = json!({
        "kind": kind,
        "source_count": source.len(),
        "target_count": target.len(),
        "planted_count": planted_ids.len(),
        "dim": spec.dim,
        "seed": seed,
    });
    Ok(out)
}
