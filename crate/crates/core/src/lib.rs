//! Target-domain corpus curation over clip-level video embeddings.
//!
//! The crate reads embedding shards for a large *source* corpus and a small
//! *target* corpus, scores every source video against the target set, and
//! selects a domain-matched subset for pre-training. Alongside curation it
//! carries a zero-shot retrieval probe and the numerics of in-batch
//! contrastive losses with expanded negative sets.
//!
//! Modules:
//! - [`store`]: shard format, manifests, metadata, clip windowing.
//! - [`similarity`]: pair scores, dense kernel, streaming reducers.
//! - [`curation`]: average-similarity, KNN, heuristic, overlap exclusion,
//!   incremental schedules.
//! - [`probe`]: recall@k and median rank.
//! - [`nce`]: contrastive losses and gradients.

pub mod curation;
pub mod error;
mod exec;
pub mod jsonl;
pub mod nce;
pub mod probe;
pub mod similarity;
pub mod store;
pub mod synth;

pub use error::{CupidError, Result};
