//! Binary shard codec.
//!
//! Layout (little-endian):
//!
//! ```text
//! "CPDE" | version: u16 | dim: u32 | video_count: u32
//! repeated video_count times:
//!     id_len: u16 | id: [u8; id_len] (UTF-8) | clip_count: u32 | values: [f32; clip_count * dim]
//! ```
//!
//! A manifest offset points at the `id_len` field of a video record.

use serde::{Deserialize, Serialize};

use super::ClipMatrix;
use crate::error::{CupidError, Result};

pub const SHARD_MAGIC: &[u8; 4] = b"CPDE";
pub const SHARD_VERSION: u16 = 1;
pub const SHARD_HEADER_LEN: usize = 4 + 2 + 4 + 4;

/// One manifest line: where a video lives and how many clips it carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    pub shard: String,
    pub offset: u64,
    pub clip_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardHeader {
    pub dim: u32,
    pub video_count: u32,
}

/// Borrowed view of one encoded video record.
#[derive(Debug, Clone, Copy)]
pub struct VideoRecord<'a> {
    pub video_id: &'a str,
    pub clip_count: usize,
    /// Raw little-endian f32 payload, `clip_count * dim * 4` bytes.
    pub payload: &'a [u8],
    /// Offset one past the end of this record.
    pub end: usize,
}

impl VideoRecord<'_> {
    /// Widens the payload into `buf` (cleared first).
    pub fn extend_f64(&self, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(
            self.payload
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64),
        );
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect()
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                CupidError::Format(format!(
                    "truncated shard: need {n} bytes for {what} at offset {}",
                    self.pos
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn read_header(bytes: &[u8]) -> Result<ShardHeader> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != SHARD_MAGIC {
        return Err(CupidError::Format(format!("bad shard magic {magic:?}")));
    }
    let version = cur.u16("version")?;
    if version != SHARD_VERSION {
        return Err(CupidError::Format(format!(
            "unsupported shard version {version} (expected {SHARD_VERSION})"
        )));
    }
    let dim = cur.u32("dim")?;
    let video_count = cur.u32("video_count")?;
    Ok(ShardHeader { dim, video_count })
}

/// Decodes the record at `offset` without checking value finiteness.
pub fn record_at(bytes: &[u8], offset: usize, dim: usize) -> Result<VideoRecord<'_>> {
    if offset < SHARD_HEADER_LEN {
        return Err(CupidError::Format(format!(
            "record offset {offset} points into the shard header"
        )));
    }
    let mut cur = Cursor { bytes, pos: offset };
    let id_len = cur.u16("id_len")? as usize;
    let id_bytes = cur.take(id_len, "video id")?;
    let video_id = std::str::from_utf8(id_bytes)
        .map_err(|e| CupidError::Format(format!("video id at offset {offset} is not UTF-8: {e}")))?;
    let clip_count = cur.u32("clip_count")? as usize;
    let payload_len = clip_count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| CupidError::Format(format!("payload size overflow for '{video_id}'")))?;
    let payload = cur.take(payload_len, "clip values")?;
    Ok(VideoRecord {
        video_id,
        clip_count,
        payload,
        end: cur.pos,
    })
}

/// Fully decodes and validates the record at `offset`.
pub fn decode_video_at(bytes: &[u8], offset: usize, dim: usize) -> Result<ClipMatrix> {
    let rec = record_at(bytes, offset, dim)?;
    ClipMatrix::new(rec.video_id, dim, rec.to_f32())
}

/// Decodes every record of a shard, validating it, and returns one manifest
/// entry per video. `shard_name` is copied into each entry.
pub fn ingest_shard(bytes: &[u8], expected_dim: usize, shard_name: &str) -> Result<Vec<ManifestEntry>> {
    if expected_dim == 0 {
        return Err(CupidError::Argument("expected_dim must be positive".into()));
    }
    let header = read_header(bytes)?;
    if header.video_count == 0 {
        if bytes.len() != SHARD_HEADER_LEN {
            return Err(CupidError::Format("trailing bytes after empty shard".into()));
        }
        return Ok(Vec::new());
    }
    if header.dim as usize != expected_dim {
        return Err(CupidError::Schema(format!(
            "shard '{shard_name}' has dim {}, expected {expected_dim}",
            header.dim
        )));
    }
    let mut entries = Vec::with_capacity(header.video_count as usize);
    let mut seen = std::collections::HashSet::new();
    let mut pos = SHARD_HEADER_LEN;
    for _ in 0..header.video_count {
        let rec = record_at(bytes, pos, expected_dim)?;
        if rec.clip_count == 0 {
            return Err(CupidError::data(rec.video_id, "video has zero clips"));
        }
        if let Some(bad) = rec.to_f32().iter().position(|v| !v.is_finite()) {
            return Err(CupidError::data(
                rec.video_id,
                format!("non-finite value at flat index {bad}"),
            ));
        }
        if !seen.insert(rec.video_id) {
            return Err(CupidError::data(rec.video_id, "duplicate video id in shard"));
        }
        entries.push(ManifestEntry {
            video_id: rec.video_id.to_owned(),
            shard: shard_name.to_owned(),
            offset: pos as u64,
            clip_count: rec.clip_count as u32,
        });
        pos = rec.end;
    }
    if pos != bytes.len() {
        return Err(CupidError::Format(format!(
            "{} trailing bytes after last video",
            bytes.len() - pos
        )));
    }
    Ok(entries)
}

/// Encodes videos into a shard. An empty list produces a header-only shard
/// with dim 0.
pub fn write_shard(videos: &[ClipMatrix]) -> Result<Vec<u8>> {
    let dim = videos.first().map_or(0, |v| v.dim());
    let mut seen = std::collections::HashSet::new();
    let mut size = SHARD_HEADER_LEN;
    for v in videos {
        if v.dim() != dim {
            return Err(CupidError::Schema(format!(
                "video '{}' has dim {}, shard dim is {dim}",
                v.video_id(),
                v.dim()
            )));
        }
        if !seen.insert(v.video_id()) {
            return Err(CupidError::Schema(format!("duplicate video id '{}'", v.video_id())));
        }
        if v.video_id().len() > u16::MAX as usize {
            return Err(CupidError::Schema(format!(
                "video id longer than {} bytes",
                u16::MAX
            )));
        }
        size += 2 + v.video_id().len() + 4 + v.values().len() * 4;
    }
    let video_count = u32::try_from(videos.len())
        .map_err(|_| CupidError::Schema("too many videos for one shard".into()))?;

    let mut out = Vec::with_capacity(size);
    out.extend_from_slice(SHARD_MAGIC);
    out.extend_from_slice(&SHARD_VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&video_count.to_le_bytes());
    for v in videos {
        out.extend_from_slice(&(v.video_id().len() as u16).to_le_bytes());
        out.extend_from_slice(v.video_id().as_bytes());
        out.extend_from_slice(&(v.clip_count() as u32).to_le_bytes());
        for x in v.values() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vid(id: &str, dim: usize, values: Vec<f32>) -> ClipMatrix {
        ClipMatrix::new(id, dim, values).unwrap()
    }

    #[test]
    fn two_videos_offsets() {
        let a = vid("a", 4, vec![1.0, 0.0, 0.0, 0.0]);
        let b = vid("bb", 4, vec![0.5; 8]);
        let bytes = write_shard(&[a.clone(), b.clone()]).unwrap();
        let entries = ingest_shard(&bytes, 4, "s0").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].offset, SHARD_HEADER_LEN as u64);
        // id_len + "a" + clip_count + 4 floats
        assert_eq!(entries[1].offset, (SHARD_HEADER_LEN + 2 + 1 + 4 + 16) as u64);
        assert_eq!(entries[1].clip_count, 2);
        assert_eq!(decode_video_at(&bytes, entries[1].offset as usize, 4).unwrap(), b);
        assert_eq!(decode_video_at(&bytes, entries[0].offset as usize, 4).unwrap(), a);
    }

    #[test]
    fn single_clip_bit_exact() {
        let a = vid("v", 4, vec![1.0, 0.0, 0.0, 0.0]);
        let bytes = write_shard(std::slice::from_ref(&a)).unwrap();
        let e = ingest_shard(&bytes, 4, "s").unwrap();
        let back = decode_video_at(&bytes, e[0].offset as usize, 4).unwrap();
        let bits = |m: &ClipMatrix| m.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&a));
    }

    #[test]
    fn empty_shard_is_valid() {
        let bytes = write_shard(&[]).unwrap();
        assert_eq!(bytes.len(), SHARD_HEADER_LEN);
        assert!(ingest_shard(&bytes, 16, "e").unwrap().is_empty());
    }

    #[test]
    fn dim_mismatch_is_schema_error() {
        let bytes = write_shard(&[vid("a", 8, vec![0.0; 8])]).unwrap();
        assert!(matches!(ingest_shard(&bytes, 4, "s"), Err(CupidError::Schema(_))));
    }

    #[test]
    fn mixed_dims_rejected_on_write() {
        let r = write_shard(&[vid("a", 2, vec![0.0; 2]), vid("b", 3, vec![0.0; 3])]);
        assert!(matches!(r, Err(CupidError::Schema(_))));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = write_shard(&[vid("a", 2, vec![1.0, 2.0])]).unwrap();
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(ingest_shard(&wrong, 2, "s"), Err(CupidError::Format(_))));
        bytes[4] = 9;
        assert!(matches!(ingest_shard(&bytes, 2, "s"), Err(CupidError::Format(_))));
    }

    // Hand-assembled shards: the writer refuses to produce these.
    fn raw_shard(dim: u32, id: &str, clip_count: u32, values: &[f32]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(SHARD_MAGIC);
        out.extend_from_slice(&SHARD_VERSION.to_le_bytes());
        out.extend_from_slice(&dim.to_le_bytes());
        out.extend_from_slice(&1u32.to_le_bytes());
        out.extend_from_slice(&(id.len() as u16).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        out.extend_from_slice(&clip_count.to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    #[test]
    fn zero_clip_video_names_offender() {
        let bytes = raw_shard(4, "empty-one", 0, &[]);
        match ingest_shard(&bytes, 4, "s") {
            Err(CupidError::Data { video_id, .. }) => assert_eq!(video_id, "empty-one"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_value_names_offender() {
        let bytes = raw_shard(2, "nan-vid", 1, &[1.0, f32::NAN]);
        match ingest_shard(&bytes, 2, "s") {
            Err(CupidError::Data { video_id, .. }) => assert_eq!(video_id, "nan-vid"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_and_trailing_bytes() {
        let bytes = write_shard(&[vid("a", 2, vec![1.0, 2.0])]).unwrap();
        assert!(matches!(
            ingest_shard(&bytes[..bytes.len() - 1], 2, "s"),
            Err(CupidError::Format(_))
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(ingest_shard(&long, 2, "s"), Err(CupidError::Format(_))));
    }

    #[test]
    fn corrupted_offset_fails_decode() {
        let bytes = write_shard(&[vid("abc", 2, vec![1.0, 2.0, 3.0, 4.0])]).unwrap();
        // Points into the middle of the payload: garbage id_len runs off the end.
        assert!(decode_video_at(&bytes, bytes.len() - 3, 2).is_err());
        assert!(decode_video_at(&bytes, 2, 2).is_err());
        assert!(decode_video_at(&bytes, bytes.len() + 10, 2).is_err());
    }
}
