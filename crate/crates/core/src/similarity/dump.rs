//! Kernel dump (`CPDK`) and column-mean JSON-lines files.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::dense::SimilarityView;
use super::stream::ColumnMeans;
use crate::error::{CupidError, Result};
use crate::jsonl;

pub const DENSE_MAGIC: &[u8; 4] = b"CPDK";
pub const DENSE_VERSION: u16 = 1;
const DENSE_HEADER_LEN: usize = 4 + 2 + 4 + 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeanRecord {
    pub source_id: String,
    pub avg_sim: f64,
}

/// Scores only; ids are not part of the dump.
pub fn write_dense(view: &SimilarityView) -> Vec<u8> {
    let mut out = Vec::with_capacity(DENSE_HEADER_LEN + view.scores.len() * 4);
    out.extend_from_slice(DENSE_MAGIC);
    out.extend_from_slice(&DENSE_VERSION.to_le_bytes());
    out.extend_from_slice(&(view.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(view.cols() as u32).to_le_bytes());
    for s in &view.scores {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Returns `(P, N, scores)`.
pub fn read_dense(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < DENSE_HEADER_LEN || &bytes[..4] != DENSE_MAGIC {
        return Err(CupidError::Format("not a CPDK kernel dump".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != DENSE_VERSION {
        return Err(CupidError::Format(format!("unsupported CPDK version {version}")));
    }
    let p = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let body = &bytes[DENSE_HEADER_LEN..];
    if body.len() != p * n * 4 {
        return Err(CupidError::Format(format!(
            "CPDK body is {} bytes, expected {}",
            body.len(),
            p * n * 4
        )));
    }
    let scores = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok((p, n, scores))
}

pub fn write_column_means(means: &ColumnMeans) -> Result<Vec<u8>> {
    let records: Vec<ColumnMeanRecord> = means
        .source_ids
        .iter()
        .zip(&means.means)
        .map(|(id, &m)| ColumnMeanRecord {
            source_id: id.clone(),
            avg_sim: m,
        })
        .collect();
    jsonl::to_jsonl_bytes(&records)
}

pub fn read_column_means<R: BufRead>(reader: R) -> Result<ColumnMeans> {
    let records: Vec<ColumnMeanRecord> = jsonl::read_jsonl(reader)?;
    let mut seen = std::collections::HashSet::new();
    for r in &records {
        if !seen.insert(r.source_id.as_str()) {
            return Err(CupidError::data(&r.source_id, "duplicate column-mean record"));
        }
        if !r.avg_sim.is_finite() {
            return Err(CupidError::data(&r.source_id, "non-finite avg_sim"));
        }
    }
    Ok(ColumnMeans {
        source_ids: records.iter().map(|r| r.source_id.clone()).collect(),
        means: records.iter().map(|r| r.avg_sim).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip() {
        let v = SimilarityView {
            target_ids: vec!["t".into(), "u".into()],
            source_ids: vec!["a".into(), "b".into(), "c".into()],
            scores: vec![0.1, -2.0, 3.5, 0.0, 1e-7, 9.0],
        };
        let (p, n, s) = read_dense(&write_dense(&v)).unwrap();
        assert_eq!((p, n), (2, 3));
        assert_eq!(s, v.scores);
        assert!(read_dense(b"CPDKxx").is_err());
    }

    #[test]
    fn column_means_round_trip() {
        let m = ColumnMeans {
            source_ids: vec!["a".into(), "b".into()],
            means: vec![0.125, -1.0 / 3.0],
        };
        let bytes = write_column_means(&m).unwrap();
        assert_eq!(read_column_means(&bytes[..]).unwrap(), m);
    }
}
