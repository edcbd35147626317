use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSource {
    pub source_id: String,
    pub score: f32,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f32,
    id_rank: u32,
    index: u32,
}

// Greater = better: higher score, then smaller id rank.
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.id_rank.cmp(&self.id_rank))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

/// Bounded min-heap keeping the `k` best `(score, source)` pairs.
///
/// Ties on score go to the smaller `id_rank` (the source's position in
/// ascending id order), so the kept set is unique for distinct ids.
#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    heap: BinaryHeap<Reverse<Candidate>>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    pub fn push(&mut self, score: f32, id_rank: u32, index: u32) {
        if self.k == 0 {
            return;
        }
        let cand = Candidate {
            score,
            id_rank,
            index,
        };
        if self.heap.len() < self.k {
            self.heap.push(Reverse(cand));
        } else if let Some(Reverse(worst)) = self.heap.peek() {
            if cand > *worst {
                self.heap.pop();
                self.heap.push(Reverse(cand));
            }
        }
    }

    pub fn merge(&mut self, other: TopK) {
        for Reverse(c) in other.heap {
            self.push(c.score, c.id_rank, c.index);
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// `(index, score)` pairs, best first.
    pub fn into_sorted(self) -> Vec<(u32, f32)> {
        let mut v: Vec<Candidate> = self.heap.into_iter().map(|Reverse(c)| c).collect();
        v.sort_by(|a, b| b.cmp(a));
        v.into_iter().map(|c| (c.index, c.score)).collect()
    }
}

/// Position of each id in ascending id order.
pub fn id_ranks<S: AsRef<str>>(ids: &[S]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].as_ref().cmp(ids[b].as_ref()));
    let mut ranks = vec![0u32; ids.len()];
    for (rank, idx) in order.into_iter().enumerate() {
        ranks[idx] = rank as u32;
    }
    ranks
}
