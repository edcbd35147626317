//! In-batch contrastive objective numerics.
//!
//! A batch of `B` video/text pairs yields a `B × B` score grid where cell
//! `(a, b)` scores video `a` against text `b`. Each anchor `a` owns the
//! positive cells in its row and column. Its negatives are either the
//! remaining cells of that row and column ([`NegativeMode::Standard`]) or
//! every non-positive cell of the grid ([`NegativeMode::NSquared`]).
//!
//! Per-anchor loss is `logsumexp(pos ∪ neg) - logsumexp(pos)`; the batch
//! loss is the mean over anchors. Scores are taken as given, so any
//! temperature must already be applied.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{CupidError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeMode {
    Standard,
    NSquared,
}

pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    batch: usize,
    scores: Vec<f64>,
    positive_mask: Vec<bool>,
}

impl ScoreGrid {
    /// Grid with diagonal-only positives.
    pub fn new(batch: usize, scores: Vec<f64>) -> Result<Self> {
        let mask = (0..batch * batch).map(|i| i / batch.max(1) == i % batch.max(1)).collect();
        Self::with_mask(batch, scores, mask)
    }

    /// Grid with extra positives (multiple-instance style). The diagonal
    /// must be positive.
    pub fn with_mask(batch: usize, scores: Vec<f64>, positive_mask: Vec<bool>) -> Result<Self> {
        if batch == 0 {
            return Err(CupidError::Argument("batch must be at least 1".into()));
        }
        if scores.len() != batch * batch || positive_mask.len() != batch * batch {
            return Err(CupidError::Schema(format!(
                "grid of batch {batch} needs {} cells",
                batch * batch
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(CupidError::Argument(format!("non-finite score at cell {i}")));
        }
        if let Some(a) = (0..batch).find(|&a| !positive_mask[a * batch + a]) {
            return Err(CupidError::Argument(format!("diagonal cell ({a},{a}) must be positive")));
        }
        Ok(Self {
            batch,
            scores,
            positive_mask,
        })
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn score(&self, (r, c): Cell) -> f64 {
        self.scores[r * self.batch + c]
    }

    pub fn is_positive(&self, (r, c): Cell) -> bool {
        self.positive_mask[r * self.batch + c]
    }

    /// Same mask, different scores.
    pub fn with_scores(&self, scores: Vec<f64>) -> Result<Self> {
        Self::with_mask(self.batch, scores, self.positive_mask.clone())
    }

    fn row_and_column(&self, anchor: usize) -> impl Iterator<Item = Cell> + '_ {
        let b = self.batch;
        (0..b)
            .map(move |j| (anchor, j))
            .chain((0..b).filter(move |&j| j != anchor).map(move |j| (j, anchor)))
    }

    pub fn positive_set(&self, anchor: usize) -> Vec<Cell> {
        self.row_and_column(anchor)
            .filter(|&c| self.is_positive(c))
            .collect()
    }
}

fn check_anchor(grid: &ScoreGrid, anchor: usize) -> Result<()> {
    if anchor >= grid.batch {
        return Err(CupidError::Argument(format!(
            "anchor {anchor} out of range for batch {}",
            grid.batch
        )));
    }
    Ok(())
}

fn negatives(grid: &ScoreGrid, mode: NegativeMode, anchor: usize) -> Vec<Cell> {
    match mode {
        NegativeMode::Standard => grid
            .row_and_column(anchor)
            .filter(|&c| !grid.is_positive(c))
            .collect(),
        NegativeMode::NSquared => {
            let b = grid.batch;
            (0..b * b)
                .map(|i| (i / b, i % b))
                .filter(|&c| !grid.is_positive(c))
                .collect()
        }
    }
}

pub fn negative_set(grid: &ScoreGrid, mode: NegativeMode, anchor: usize) -> Result<BTreeSet<Cell>> {
    check_anchor(grid, anchor)?;
    Ok(negatives(grid, mode, anchor).into_iter().collect())
}

fn logsumexp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mean over anchors of `-log(Σ_pos e^s / Σ_{pos ∪ neg} e^s)`.
pub fn nce_loss(grid: &ScoreGrid, mode: NegativeMode) -> f64 {
    nce_loss_grad_inner(grid, mode, false).0
}

/// Loss and its gradient with respect to every score cell (row-major).
pub fn nce_loss_grad(grid: &ScoreGrid, mode: NegativeMode) -> (f64, Vec<f64>) {
    nce_loss_grad_inner(grid, mode, true)
}

fn nce_loss_grad_inner(grid: &ScoreGrid, mode: NegativeMode, want_grad: bool) -> (f64, Vec<f64>) {
    let b = grid.batch;
    let mut grad = if want_grad { vec![0.0; b * b] } else { Vec::new() };
    let mut total = 0.0;
    for anchor in 0..b {
        let neg = negatives(grid, mode, anchor);
        if neg.is_empty() {
            continue;
        }
        let pos = grid.positive_set(anchor);
        let pos_scores = pos.iter().map(|&c| grid.score(c));
        let all_scores = pos_scores.clone().chain(neg.iter().map(|&c| grid.score(c)));
        let lse_pos = logsumexp(pos_scores);
        let lse_all = logsumexp(all_scores);
        total += lse_all - lse_pos;
        if want_grad {
            for &c in &pos {
                let s = grid.score(c);
                grad[c.0 * b + c.1] += ((s - lse_all).exp() - (s - lse_pos).exp()) / b as f64;
            }
            for &c in &neg {
                grad[c.0 * b + c.1] += (grid.score(c) - lse_all).exp() / b as f64;
            }
        }
    }
    (total / b as f64, grad)
}

/// Analytic gradient compared with central finite differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub mode: NegativeMode,
    pub batch: usize,
    pub loss: f64,
    pub step: f64,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
}

/// Central differences of [`nce_loss`] with step `h`, one cell at a time.
pub fn finite_difference_grad(grid: &ScoreGrid, mode: NegativeMode, h: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.scores.len());
    for i in 0..grid.scores.len() {
        let mut plus = grid.scores.clone();
        plus[i] += h;
        let mut minus = grid.scores.clone();
        minus[i] -= h;
        let up = nce_loss(&grid.with_scores(plus)?, mode);
        let down = nce_loss(&grid.with_scores(minus)?, mode);
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Relative error per cell is `|g - fd| / max(|g|, |fd|, 1e-8)`; the floor
/// keeps cells whose true gradient is zero from dividing by zero.
pub fn gradient_check(grid: &ScoreGrid, mode: NegativeMode, h: f64) -> Result<GradientCheck> {
    let (loss, grad) = nce_loss_grad(grid, mode);
    let fd = finite_difference_grad(grid, mode, h)?;
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for (g, f) in grad.iter().zip(&fd) {
        let abs = (g - f).abs();
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(abs / g.abs().max(f.abs()).max(1e-8));
    }
    Ok(GradientCheck {
        mode,
        batch: grid.batch,
        loss,
        step: h,
        max_abs_error: max_abs,
        max_rel_error: max_rel,
    })
}
