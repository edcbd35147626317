use std::collections::HashMap;
use std::ops::Deref;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::shard::{self, ManifestEntry, VideoRecord};
use super::ClipMatrix;
use crate::error::{CupidError, Result};
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusRole {
    Source,
    Target,
}

/// Backing bytes of one shard, owned or memory-mapped.
pub enum ShardBytes {
    Owned(Vec<u8>),
    #[cfg(feature = "mmap")]
    Mapped(memmap2::Mmap),
}

impl Deref for ShardBytes {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        match self {
            ShardBytes::Owned(v) => v,
            #[cfg(feature = "mmap")]
            ShardBytes::Mapped(m) => m,
        }
    }
}

impl std::fmt::Debug for ShardBytes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ShardBytes({} bytes)", self.len())
    }
}

impl ShardBytes {
    #[cfg(feature = "mmap")]
    pub fn map_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        // Shards are treated as immutable once written.
        let map = unsafe { memmap2::Mmap::map(&file)? };
        Ok(ShardBytes::Mapped(map))
    }

    #[cfg(not(feature = "mmap"))]
    pub fn map_file(path: &Path) -> Result<Self> {
        Ok(ShardBytes::Owned(std::fs::read(path)?))
    }
}

/// Immutable random-access view over one corpus (source or target).
///
/// Videos are addressed either by id or by their position in the manifest;
/// every reducer iterates in manifest order.
#[derive(Debug)]
pub struct CorpusHandle {
    corpus_id: String,
    role: CorpusRole,
    dim: usize,
    manifest: Vec<ManifestEntry>,
    shards: Vec<ShardBytes>,
    entry_shard: Vec<usize>,
    index: HashMap<String, usize>,
}

impl CorpusHandle {
    /// Builds an in-memory corpus from already-decoded videos.
    pub fn from_videos(corpus_id: &str, role: CorpusRole, videos: &[ClipMatrix]) -> Result<Self> {
        let dim = videos
            .first()
            .map(ClipMatrix::dim)
            .ok_or_else(|| CupidError::Argument(format!("corpus '{corpus_id}' has no videos")))?;
        let bytes = shard::write_shard(videos)?;
        Self::from_shards(corpus_id, role, dim, vec![("<memory>".to_owned(), ShardBytes::Owned(bytes))])
    }

    /// Ingests each shard (validating every video) and assembles the manifest.
    pub fn from_shards(
        corpus_id: &str,
        role: CorpusRole,
        dim: usize,
        shards: Vec<(String, ShardBytes)>,
    ) -> Result<Self> {
        let mut manifest = Vec::new();
        let mut entry_shard = Vec::new();
        let mut bytes = Vec::with_capacity(shards.len());
        for (slot, (name, data)) in shards.into_iter().enumerate() {
            let entries = shard::ingest_shard(&data, dim, &name)?;
            entry_shard.extend(std::iter::repeat_n(slot, entries.len()));
            manifest.extend(entries);
            bytes.push(data);
        }
        Self::assemble(corpus_id, role, dim, manifest, bytes, entry_shard)
    }

    /// Opens a JSON-lines manifest. Relative shard paths resolve against the
    /// manifest's directory. Every entry is decoded and checked.
    pub fn open_manifest(path: &Path, corpus_id: &str, role: CorpusRole) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| CupidError::NotFound(format!("manifest {}: {e}", path.display())))?;
        let manifest: Vec<ManifestEntry> = jsonl::read_jsonl(std::io::BufReader::new(file))?;
        if manifest.is_empty() {
            return Err(CupidError::Argument(format!("manifest {} is empty", path.display())));
        }
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut slots: HashMap<String, usize> = HashMap::new();
        let mut shards = Vec::new();
        let mut entry_shard = Vec::with_capacity(manifest.len());
        let mut dim: Option<usize> = None;
        for entry in &manifest {
            let slot = match slots.get(&entry.shard) {
                Some(&s) => s,
                None => {
                    let shard_path = resolve(base, &entry.shard);
                    let data = ShardBytes::map_file(&shard_path).map_err(|e| {
                        CupidError::NotFound(format!("shard {}: {e}", shard_path.display()))
                    })?;
                    let header = shard::read_header(&data)?;
                    let d = header.dim as usize;
                    match dim {
                        None => dim = Some(d),
                        Some(prev) if prev != d => {
                            return Err(CupidError::Schema(format!(
                                "shard '{}' has dim {d}, corpus dim is {prev}",
                                entry.shard
                            )))
                        }
                        _ => {}
                    }
                    shards.push(data);
                    slots.insert(entry.shard.clone(), shards.len() - 1);
                    shards.len() - 1
                }
            };
            entry_shard.push(slot);
        }
        let dim = dim.unwrap_or(0);
        Self::assemble(corpus_id, role, dim, manifest, shards, entry_shard)
    }

    fn assemble(
        corpus_id: &str,
        role: CorpusRole,
        dim: usize,
        manifest: Vec<ManifestEntry>,
        shards: Vec<ShardBytes>,
        entry_shard: Vec<usize>,
    ) -> Result<Self> {
        if manifest.is_empty() {
            return Err(CupidError::Argument(format!("corpus '{corpus_id}' has no videos")));
        }
        let mut index = HashMap::with_capacity(manifest.len());
        for (i, e) in manifest.iter().enumerate() {
            if index.insert(e.video_id.clone(), i).is_some() {
                return Err(CupidError::data(&e.video_id, "duplicate video id in corpus"));
            }
        }
        let handle = Self {
            corpus_id: corpus_id.to_owned(),
            role,
            dim,
            manifest,
            shards,
            entry_shard,
            index,
        };
        for i in 0..handle.len() {
            let entry = &handle.manifest[i];
            let m = handle.video_at(i)?;
            if m.video_id() != entry.video_id || m.clip_count() != entry.clip_count as usize {
                return Err(CupidError::Format(format!(
                    "manifest entry '{}' does not match the record at offset {} of '{}'",
                    entry.video_id, entry.offset, entry.shard
                )));
            }
        }
        Ok(handle)
    }

    pub fn corpus_id(&self) -> &str {
        &self.corpus_id
    }

    pub fn role(&self) -> CorpusRole {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.manifest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.is_empty()
    }

    pub fn manifest(&self) -> &[ManifestEntry] {
        &self.manifest
    }

    pub fn video_id(&self, idx: usize) -> &str {
        &self.manifest[idx].video_id
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.manifest.iter().map(|e| e.video_id.as_str())
    }

    pub fn position(&self, video_id: &str) -> Option<usize> {
        self.index.get(video_id).copied()
    }

    pub fn total_clips(&self) -> usize {
        self.manifest.iter().map(|e| e.clip_count as usize).sum()
    }

    /// Borrowed record of the video at manifest position `idx`.
    pub fn record(&self, idx: usize) -> Result<VideoRecord<'_>> {
        let entry = &self.manifest[idx];
        let bytes = &self.shards[self.entry_shard[idx]];
        shard::record_at(bytes, entry.offset as usize, self.dim)
    }

    pub fn video_at(&self, idx: usize) -> Result<ClipMatrix> {
        let entry = &self.manifest[idx];
        let bytes = &self.shards[self.entry_shard[idx]];
        shard::decode_video_at(bytes, entry.offset as usize, self.dim)
    }

    pub fn load_video(&self, video_id: &str) -> Result<ClipMatrix> {
        let idx = self
            .position(video_id)
            .ok_or_else(|| CupidError::NotFound(format!("video '{video_id}' in corpus '{}'", self.corpus_id)))?;
        self.video_at(idx)
    }

    /// Loads every video widened to f64, in manifest order.
    pub fn load_all_f64(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.len())
            .map(|i| {
                let mut buf = Vec::new();
                self.record(i)?.extend_f64(&mut buf);
                Ok(buf)
            })
            .collect()
    }
}

fn resolve(base: &Path, shard: &str) -> PathBuf {
    let p = Path::new(shard);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
