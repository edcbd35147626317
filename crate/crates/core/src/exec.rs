//! Order-preserving parallel map used by the reducers.
//!
//! Results are always collected in index order, so output never depends on
//! the worker count.

use crate::error::Result;

/// A worker pool capped at a fixed thread count.
pub struct Workers {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Workers {
    /// `threads == 0` lets the runtime choose; `1` runs inline.
    #[cfg(feature = "parallel")]
    pub fn new(threads: usize) -> Result<Self> {
        if threads == 1 {
            return Ok(Self { pool: None });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| {
                crate::error::CupidError::Argument(format!("cannot start worker pool: {e}"))
            })?;
        Ok(Self { pool: Some(pool) })
    }

    #[cfg(not(feature = "parallel"))]
    pub fn new(_threads: usize) -> Result<Self> {
        Ok(Self {})
    }

    /// Runs `f` over `0..n` and returns the results in index order.
    #[cfg(feature = "parallel")]
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        use rayon::prelude::*;
        match &self.pool {
            Some(pool) if n > 1 => pool.install(|| (0..n).into_par_iter().map(f).collect()),
            _ => (0..n).map(f).collect(),
        }
    }

    #[cfg(not(feature = "parallel"))]
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        F: Fn(usize) -> T,
    {
        (0..n).map(f).collect()
    }
}

pub fn collect_results<T>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}
