//! Sentence-layered LDA: a three-level topic model (document → sentence topic →
//! word topic) with collapsed Gibbs inference, standard-LDA baselines, held-out
//! perplexity evaluation, and exact-enumeration correctness oracles.
//!
//! All randomness flows through [`rng::RngStream`] so every chain, split, and
//! grid cell is reproducible from a 64-bit seed. With the default `parallel`
//! feature, embarrassingly parallel work (grid cells, enumeration, per-token
//! scoring) runs on rayon; results are identical to the sequential build.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod hyper;
pub mod lda;
pub mod math;
pub mod par;
pub mod rng;
pub mod slda;

pub use error::{Error, Result};
