//! Near-duplicate document detection with a mover's distance over
//! character n-gram (or word) embeddings.
//!
//! The crate covers the full pipeline: recipe ingestion and date splits
//! ([`corpus`]), text normalization ([`textnorm`]), tokenization
//! ([`tokenize`]), skip-gram negative-sampling embeddings ([`embed`]), the
//! exact transport distance with lower-bound pruned top-k search
//! ([`mover`]), the ingredient-list distance ([`ingredients`]), candidate
//! extraction and reporting ([`pipeline`]), and the two-feature pair
//! classifier ([`classify`]).
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and the current pool has more than one thread; otherwise
//! they fall back to plain sequential iteration.

pub mod classify;
pub mod corpus;
pub mod embed;
mod error;
pub mod exec;
pub mod ingredients;
pub mod mover;
pub mod pipeline;
pub mod synth;
pub mod textnorm;
pub mod tokenize;

pub use error::{Error, Result};
