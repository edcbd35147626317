//! Zero-shot text-to-video retrieval probe: rank each query's ground-truth
//! candidate by dot product and summarize recall@k and median rank.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CupidError, Result};
use crate::similarity::dot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub ranks: Vec<usize>,
    pub recall_at: BTreeMap<usize, f64>,
    pub median_rank: usize,
}

/// JSON probe report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub recall: BTreeMap<usize, f64>,
    pub median_rank: usize,
    pub query_count: usize,
    pub candidate_count: usize,
}

impl RetrievalResult {
    pub fn report(&self, candidate_count: usize) -> ProbeReport {
        ProbeReport {
            recall: self.recall_at.clone(),
            median_rank: self.median_rank,
            query_count: self.ranks.len(),
            candidate_count,
        }
    }
}

fn rows(data: &[f32], dim: usize, what: &str) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(CupidError::Schema(format!(
            "{what}: {} values do not form rows of dim {dim}",
            data.len()
        )));
    }
    Ok(data
        .chunks_exact(dim)
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect())
}

/// Rank of each query's ground truth: one plus the number of candidates
/// scoring strictly higher. Ties resolve in the query's favor.
pub fn rank_queries(
    queries: &[f32],
    candidates: &[f32],
    dim: usize,
    ground_truth: &[usize],
) -> Result<Vec<usize>> {
    let q = rows(queries, dim, "queries")?;
    let c = rows(candidates, dim, "candidates")?;
    if c.is_empty() {
        return Err(CupidError::Argument("no candidates".into()));
    }
    if ground_truth.len() != q.len() {
        return Err(CupidError::Argument(format!(
            "{} ground-truth indices for {} queries",
            ground_truth.len(),
            q.len()
        )));
    }
    if let Some(&bad) = ground_truth.iter().find(|&&g| g >= c.len()) {
        return Err(CupidError::Argument(format!(
            "ground-truth index {bad} out of range for {} candidates",
            c.len()
        )));
    }
    Ok(q
        .iter()
        .zip(ground_truth)
        .map(|(query, &gt)| {
            let truth = dot(query, &c[gt]);
            1 + c.iter().filter(|cand| dot(query, cand) > truth).count()
        })
        .collect())
}

/// Recall at each `k` and the lower median rank (order statistic
/// `ceil(n / 2)` of the sorted ranks).
pub fn summarize(ranks: &[usize], ks: &[usize]) -> Result<RetrievalResult> {
    if ranks.is_empty() {
        return Err(CupidError::Argument("no ranks to summarize".into()));
    }
    if ranks.contains(&0) {
        return Err(CupidError::Argument("ranks start at 1".into()));
    }
    if ks.contains(&0) {
        return Err(CupidError::Argument("recall cutoffs must be positive".into()));
    }
    let n = ranks.len();
    let recall_at = ks
        .iter()
        .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n as f64))
        .collect();
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    Ok(RetrievalResult {
        ranks: ranks.to_vec(),
        recall_at,
        median_rank: sorted[n.div_ceil(2) - 1],
    })
}
