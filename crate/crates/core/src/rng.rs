//! Deterministic randomness. Every chain, split, and grid cell draws from an
//! [`RngStream`] seeded by a 64-bit value, so identical seeds give identical
//! sample paths; independent substreams are derived by hashing the parent seed
//! with a label rather than by consuming parent state.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The generator backing every stream. Recorded in model metadata so a model
/// file pins the exact sampler family that produced it.
pub const RNG_KIND: &str = "chacha8";

/// SplitMix64 finalizer: a well-mixed 64-bit hash step used to derive
/// independent seeds from (seed, label) pairs.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a sequence of 64-bit parts into one seed. Used for per-cell grid
/// seeds (master seed + cell coordinates) and stream derivation.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h = 0x853C_49E6_748F_EA9B;
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

/// A seedable, reproducible random stream (ChaCha8 keyed by the seed).
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent stream derived from this stream's seed and a label.
    /// Depends only on (seed, label) — not on how much of this stream has
    /// been consumed — so derivation order never affects reproducibility.
    pub fn substream(&self, label: u64) -> RngStream {
        RngStream::new(derive_seed(&[self.seed, label]))
    }

    /// One uniform variate in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in [0, n); consumes exactly one uniform variate.
    pub fn uniform_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "uniform_index needs n > 0");
        let i = (self.next_f64() * n as f64) as usize;
        i.min(n - 1)
    }
}

// RngCore delegation lets rand_distr distributions (the Dirichlet sampler in
// the synthetic generator) draw from an RngStream directly.
impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand_chacha::rand_core::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Draws an index with probability weights_i / Σ weights, consuming exactly
/// one uniform variate (a cumulative scan against u · Σ weights). Outcomes
/// with zero weight are never returned.
pub fn sample_categorical(weights: &[f64], rng: &mut RngStream) -> Result<usize> {
    if weights.is_empty() {
        return Err(Error::Domain("sample_categorical needs at least one weight".into()));
    }
    let mut total = 0.0;
    for &w in weights {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::Domain(format!(
                "sample_categorical requires finite non-negative weights, got {w}"
            )));
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::Domain("sample_categorical requires a positive total weight".into()));
    }
    let u = rng.next_f64() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = Some(i);
            acc += w;
            if u < acc {
                return Ok(i);
            }
        }
    }
    // Only reachable through floating-point shortfall at the upper edge;
    // return the last outcome that has mass.
    Ok(last_positive.expect("positive total implies a positive weight"))
}
