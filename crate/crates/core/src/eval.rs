//! Held-out evaluation, exact enumeration, and synthetic data.
//!
//! Held-out inference freezes the trained word-topic matrix φ and runs
//! collapsed Gibbs over the test side only: test z/x assignments and the
//! test-side sentence/document tables evolve, φ does not. Perplexity is
//! exp(−mean per-token log probability) under the posterior-mean readout of
//! the test-side parameters.
//!
//! [`brute_force_posterior`] enumerates every assignment configuration of a
//! (necessarily tiny) corpus and returns exact posterior probabilities — the
//! correctness oracle the samplers are tested against.

use std::io::Write as IoWrite;
use std::sync::Arc;

use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::corpus::{corpus_from_encoded, Corpus, Document, FlatView, Vocabulary};
use crate::error::{Error, Result};
use crate::lda::{as_units, Granularity};
use crate::math;
use crate::par;
use crate::rng::{sample_categorical, RngStream};
use crate::slda::{joint_log_prob_counts, CountTables, Hyperparams};

// ---------------------------------------------------------------------------
// Pointwise probabilities and perplexity
// ---------------------------------------------------------------------------

/// P(w | unit) = Σ_j θ_j φ_{j,w} under a flat topic mixture.
pub fn word_prob_lda(phi: &[Vec<f64>], theta_unit: &[f64], w: usize) -> Result<f64> {
    if phi.len() != theta_unit.len() {
        return Err(Error::Domain(format!(
            "phi has {} rows but theta has {} entries",
            phi.len(),
            theta_unit.len()
        )));
    }
    let mut p = 0.0;
    for (row, &th) in phi.iter().zip(theta_unit) {
        let pw = *row.get(w).ok_or_else(|| {
            Error::Domain(format!("word id {w} out of range for vocabulary of {}", row.len()))
        })?;
        p += th * pw;
    }
    Ok(p)
}

/// P(w | document) = Σ_l θ_l Σ_j τ_{l,j} φ_{j,w} under the three-level
/// mixture.
pub fn word_prob_slda(
    phi: &[Vec<f64>],
    tau: &[Vec<f64>],
    theta_doc: &[f64],
    w: usize,
) -> Result<f64> {
    if tau.len() != theta_doc.len() {
        return Err(Error::Domain(format!(
            "tau has {} rows but theta has {} entries",
            tau.len(),
            theta_doc.len()
        )));
    }
    let mut p = 0.0;
    for (tau_row, &th) in tau.iter().zip(theta_doc) {
        p += th * word_prob_lda(phi, tau_row, w)?;
    }
    Ok(p)
}

/// exp(−(Σ log_probs) / n_tokens). Entries must be finite: a −∞ entry means
/// an unsmoothed zero-probability token, which this model family cannot
/// produce, so it is reported as an error rather than returned as +∞.
pub fn perplexity(log_probs: &[f64], n_tokens: usize) -> Result<f64> {
    if log_probs.is_empty() || n_tokens == 0 {
        return Err(Error::Domain("perplexity needs at least one scored token".into()));
    }
    for &lp in log_probs {
        if lp.is_nan() || lp == f64::INFINITY {
            return Err(Error::Domain(format!("log probability {lp} is not finite")));
        }
        if lp == f64::NEG_INFINITY {
            return Err(Error::Domain(
                "a token had probability zero; perplexity is infinite".into(),
            ));
        }
    }
    let sum: f64 = log_probs.iter().sum();
    Ok((-sum / n_tokens as f64).exp())
}

// ---------------------------------------------------------------------------
// Held-out inference
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeldoutConfig {
    /// Test-side sweeps before the single-sample readout.
    pub test_burn_in: u32,
    /// Record a perplexity trace point every this many sweeps (the final
    /// sweep is always recorded).
    pub trace_every: u32,
}

impl Default for HeldoutConfig {
    fn default() -> Self {
        Self { test_burn_in: 500, trace_every: 10 }
    }
}

impl HeldoutConfig {
    fn validate(&self) -> Result<()> {
        if self.test_burn_in < 1 || self.trace_every < 1 {
            return Err(Error::Domain(
                "test_burn_in and trace_every must both be ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// Perplexity as a function of test-side sweep, labelled by model for
/// concatenated comparison files.
#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityTrace {
    pub model: String,
    /// (sweep, perplexity), ascending sweeps, last point at `test_burn_in`.
    pub points: Vec<(u32, f64)>,
}

/// Writes traces as CSV: `model,iteration,perplexity`. Multiple traces share
/// one file; the model column disambiguates.
pub fn write_trace_csv<W: IoWrite>(mut out: W, traces: &[&PerplexityTrace]) -> Result<()> {
    writeln!(out, "model,iteration,perplexity")?;
    for trace in traces {
        for &(iter, ppl) in &trace.points {
            writeln!(out, "{},{},{}", trace.model, iter, ppl)?;
        }
    }
    Ok(())
}

/// Test-side state for the three-level model with φ frozen. Only the
/// sentence-topic and document tables evolve.
struct HeldoutSlda<'a> {
    phi: &'a [Vec<f64>],
    hyper: Hyperparams,
    flat: FlatView,
    docs: usize,
    z: Vec<u32>,
    x: Vec<u32>,
    /// S×T and its row sums — test tokens only.
    n_st: Vec<u32>,
    n_s: Vec<u32>,
    /// L_test×S and its row sums.
    n_ds: Vec<u32>,
    n_d: Vec<u32>,
    rng: RngStream,
}

impl<'a> HeldoutSlda<'a> {
    fn init(
        phi: &'a [Vec<f64>],
        hyper: Hyperparams,
        test: &Corpus,
        mut rng: RngStream,
    ) -> Result<Self> {
        hyper.validate()?;
        check_phi(phi, hyper.t, test.vocab_size())?;
        let flat = FlatView::new(test);
        let docs = test.n_documents();
        let z: Vec<u32> = (0..flat.n_tokens())
            .map(|_| rng.uniform_index(hyper.t) as u32)
            .collect();
        let x: Vec<u32> = (0..flat.n_sentences())
            .map(|_| rng.uniform_index(hyper.s) as u32)
            .collect();
        let mut hs = Self {
            phi,
            hyper,
            flat,
            docs,
            z,
            x,
            n_st: vec![0; hyper.s * hyper.t],
            n_s: vec![0; hyper.s],
            n_ds: vec![0; docs * hyper.s],
            n_d: vec![0; docs],
            rng,
        };
        hs.retabulate();
        Ok(hs)
    }

    fn retabulate(&mut self) {
        self.n_st.fill(0);
        self.n_s.fill(0);
        self.n_ds.fill(0);
        self.n_d.fill(0);
        let t = self.hyper.t;
        let s = self.hyper.s;
        for (i, _) in self.flat.tokens.iter().enumerate() {
            let l = self.x[self.flat.token_sent[i] as usize] as usize;
            self.n_st[l * t + self.z[i] as usize] += 1;
            self.n_s[l] += 1;
        }
        for (si, &d) in self.flat.sent_doc.iter().enumerate() {
            let l = self.x[si] as usize;
            self.n_ds[d as usize * s + l] += 1;
            self.n_d[d as usize] += 1;
        }
    }

    fn sweep(&mut self) -> Result<()> {
        let h = self.hyper;
        let tgamma = h.t as f64 * h.gamma;
        let mut weights = vec![0.0; h.t];
        for i in 0..self.flat.n_tokens() {
            let w = self.flat.tokens[i] as usize;
            let l = self.x[self.flat.token_sent[i] as usize] as usize;
            let old = self.z[i] as usize;
            // Decrement: only the sentence-topic table sees z here.
            self.n_st[l * h.t + old] = self.n_st[l * h.t + old]
                .checked_sub(1)
                .ok_or_else(|| Error::Inconsistency("test count underflow".into()))?;
            self.n_s[l] -= 1;
            let denom = tgamma + f64::from(self.n_s[l]);
            for (j, wj) in weights.iter_mut().enumerate() {
                *wj = self.phi[j][w] * (h.gamma + f64::from(self.n_st[l * h.t + j])) / denom;
            }
            let j = sample_categorical(&weights, &mut self.rng)?;
            self.z[i] = j as u32;
            self.n_st[l * h.t + j] += 1;
            self.n_s[l] += 1;
        }

        let mut hist = vec![0u32; h.t];
        let mut base = vec![0.0; h.t];
        let mut logw = vec![0.0; h.s];
        for si in 0..self.x.len() {
            let d = self.flat.sent_doc[si] as usize;
            let old = self.x[si] as usize;
            self.n_ds[d * h.s + old] = self.n_ds[d * h.s + old]
                .checked_sub(1)
                .ok_or_else(|| Error::Inconsistency("test count underflow".into()))?;
            self.n_d[d] -= 1;
            hist.fill(0);
            for i in self.flat.sentence_span(si) {
                hist[self.z[i] as usize] += 1;
            }
            for (j, &hj) in hist.iter().enumerate() {
                self.n_st[old * h.t + j] -= hj;
                self.n_s[old] -= hj;
            }
            let doc_denom = (h.s as f64 * h.alpha + f64::from(self.n_d[d])).ln();
            for l in 0..h.s {
                for j in 0..h.t {
                    base[j] = h.gamma + f64::from(self.n_st[l * h.t + j]);
                }
                logw[l] = math::log_multibeta_ratio(&base, &hist)?
                    + (h.alpha + f64::from(self.n_ds[d * h.s + l])).ln()
                    - doc_denom;
            }
            let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return Err(Error::DegenerateDistribution);
            }
            for v in logw.iter_mut() {
                *v = (*v - max).exp();
            }
            let l = sample_categorical(&logw, &mut self.rng)?;
            self.x[si] = l as u32;
            self.n_ds[d * h.s + l] += 1;
            self.n_d[d] += 1;
            for (j, &hj) in hist.iter().enumerate() {
                self.n_st[l * h.t + j] += hj;
                self.n_s[l] += hj;
            }
        }
        Ok(())
    }

    /// Posterior-mean τ and θ from the current test-side counts.
    fn readout(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let h = self.hyper;
        let tau = (0..h.s)
            .map(|l| {
                let denom = h.t as f64 * h.gamma + f64::from(self.n_s[l]);
                (0..h.t)
                    .map(|j| (h.gamma + f64::from(self.n_st[l * h.t + j])) / denom)
                    .collect()
            })
            .collect();
        let theta = (0..self.docs)
            .map(|d| {
                let denom = h.s as f64 * h.alpha + f64::from(self.n_d[d]);
                (0..h.s)
                    .map(|l| (h.alpha + f64::from(self.n_ds[d * h.s + l])) / denom)
                    .collect()
            })
            .collect();
        (tau, theta)
    }
}

fn check_phi(phi: &[Vec<f64>], t: usize, v: usize) -> Result<()> {
    if phi.len() != t {
        return Err(Error::VocabMismatch(format!(
            "phi has {} rows, expected T = {t}",
            phi.len()
        )));
    }
    for row in phi {
        if row.len() != v {
            return Err(Error::VocabMismatch(format!(
                "phi row has {} entries, expected V = {v}",
                row.len()
            )));
        }
    }
    Ok(())
}

/// Test-side quantities inferred with φ frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldoutFit {
    pub tau: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub z: Vec<u32>,
    pub x: Vec<u32>,
}

pub fn heldout_infer_slda(
    phi: &[Vec<f64>],
    hyper: &Hyperparams,
    test: &Corpus,
    config: &HeldoutConfig,
    seed: u64,
) -> Result<HeldoutFit> {
    config.validate()?;
    let mut hs = HeldoutSlda::init(phi, *hyper, test, RngStream::new(seed))?;
    for _ in 0..config.test_burn_in {
        hs.sweep()?;
    }
    let (tau, theta) = hs.readout();
    Ok(HeldoutFit { tau, theta, z: hs.z, x: hs.x })
}

/// Scores every test token under the mixture and returns the final
/// perplexity plus its trace over test-side sweeps.
pub fn evaluate_slda(
    phi: &[Vec<f64>],
    hyper: &Hyperparams,
    test: &Corpus,
    config: &HeldoutConfig,
    seed: u64,
) -> Result<(f64, PerplexityTrace)> {
    config.validate()?;
    let mut hs = HeldoutSlda::init(phi, *hyper, test, RngStream::new(seed))?;
    let flat = FlatView::new(test);
    let mut points = Vec::new();
    for sweep in 1..=config.test_burn_in {
        hs.sweep()?;
        if sweep % config.trace_every == 0 || sweep == config.test_burn_in {
            let (tau, theta) = hs.readout();
            let lps = score_tokens_slda(phi, &tau, &theta, &flat);
            let ppl = perplexity(&lps, lps.len())?;
            points.push((sweep, ppl));
        }
    }
    let final_ppl = points.last().expect("burn_in ≥ 1 guarantees a point").1;
    Ok((final_ppl, PerplexityTrace { model: "slda".into(), points }))
}

/// Per-token ln P(w | d) with the document mixtures collapsed to a single
/// word-topic mixture per document (θ·τ), computed once.
fn score_tokens_slda(
    phi: &[Vec<f64>],
    tau: &[Vec<f64>],
    theta: &[Vec<f64>],
    flat: &FlatView,
) -> Vec<f64> {
    let t = phi.len();
    let mix: Vec<Vec<f64>> = theta
        .iter()
        .map(|th| {
            let mut pz = vec![0.0; t];
            for (tau_row, &w) in tau.iter().zip(th) {
                for (j, &tj) in tau_row.iter().enumerate() {
                    pz[j] += w * tj;
                }
            }
            pz
        })
        .collect();
    par::map_indices(flat.n_tokens(), |i| {
        let w = flat.tokens[i] as usize;
        let d = flat.sent_doc[flat.token_sent[i] as usize] as usize;
        let p: f64 = mix[d].iter().zip(phi).map(|(&pz, row)| pz * row[w]).sum();
        p.ln()
    })
}

/// Test-side state for the flat baselines: unit-topic table evolves, φ
/// frozen.
struct HeldoutLda<'a> {
    phi: &'a [Vec<f64>],
    alpha: f64,
    t: usize,
    tokens: Vec<u32>,
    token_unit: Vec<u32>,
    z: Vec<u32>,
    n_uz: Vec<u32>,
    n_u: Vec<u32>,
    rng: RngStream,
}

impl<'a> HeldoutLda<'a> {
    fn init(
        phi: &'a [Vec<f64>],
        alpha: f64,
        units: &[Vec<u32>],
        v: usize,
        mut rng: RngStream,
    ) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be a positive real, got {alpha}")));
        }
        let t = phi.len();
        if t == 0 {
            return Err(Error::Domain("phi must have at least one topic row".into()));
        }
        check_phi(phi, t, v)?;
        if units.is_empty() || units.iter().any(|u| u.is_empty()) {
            return Err(Error::EmptyCorpus("units must be non-empty".into()));
        }
        let mut tokens = Vec::new();
        let mut token_unit = Vec::new();
        for (u, unit) in units.iter().enumerate() {
            for &w in unit {
                tokens.push(w);
                token_unit.push(u as u32);
            }
        }
        let z: Vec<u32> = (0..tokens.len()).map(|_| rng.uniform_index(t) as u32).collect();
        let mut n_uz = vec![0u32; units.len() * t];
        let mut n_u = vec![0u32; units.len()];
        for (i, &u) in token_unit.iter().enumerate() {
            n_uz[u as usize * t + z[i] as usize] += 1;
            n_u[u as usize] += 1;
        }
        Ok(Self { phi, alpha, t, tokens, token_unit, z, n_uz, n_u, rng })
    }

    fn sweep(&mut self) -> Result<()> {
        let talpha = self.t as f64 * self.alpha;
        let mut weights = vec![0.0; self.t];
        for i in 0..self.tokens.len() {
            let w = self.tokens[i] as usize;
            let u = self.token_unit[i] as usize;
            let old = self.z[i] as usize;
            self.n_uz[u * self.t + old] = self.n_uz[u * self.t + old]
                .checked_sub(1)
                .ok_or_else(|| Error::Inconsistency("test count underflow".into()))?;
            self.n_u[u] -= 1;
            let denom = talpha + f64::from(self.n_u[u]);
            for (j, wj) in weights.iter_mut().enumerate() {
                *wj = self.phi[j][w] * (self.alpha + f64::from(self.n_uz[u * self.t + j])) / denom;
            }
            let j = sample_categorical(&weights, &mut self.rng)?;
            self.z[i] = j as u32;
            self.n_uz[u * self.t + j] += 1;
            self.n_u[u] += 1;
        }
        Ok(())
    }

    fn readout(&self) -> Vec<Vec<f64>> {
        let units = self.n_u.len();
        (0..units)
            .map(|u| {
                let denom = self.t as f64 * self.alpha + f64::from(self.n_u[u]);
                (0..self.t)
                    .map(|j| (self.alpha + f64::from(self.n_uz[u * self.t + j])) / denom)
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeldoutLdaFit {
    pub theta_units: Vec<Vec<f64>>,
    pub z: Vec<u32>,
}

pub fn heldout_infer_lda(
    phi: &[Vec<f64>],
    alpha: f64,
    granularity: Granularity,
    test: &Corpus,
    config: &HeldoutConfig,
    seed: u64,
) -> Result<HeldoutLdaFit> {
    config.validate()?;
    let units = as_units(test, granularity);
    let mut hl = HeldoutLda::init(phi, alpha, &units, test.vocab_size(), RngStream::new(seed))?;
    for _ in 0..config.test_burn_in {
        hl.sweep()?;
    }
    Ok(HeldoutLdaFit { theta_units: hl.readout(), z: hl.z })
}

pub fn evaluate_lda(
    phi: &[Vec<f64>],
    alpha: f64,
    granularity: Granularity,
    test: &Corpus,
    config: &HeldoutConfig,
    seed: u64,
) -> Result<(f64, PerplexityTrace)> {
    config.validate()?;
    let units = as_units(test, granularity);
    let mut hl = HeldoutLda::init(phi, alpha, &units, test.vocab_size(), RngStream::new(seed))?;
    let mut points = Vec::new();
    for sweep in 1..=config.test_burn_in {
        hl.sweep()?;
        if sweep % config.trace_every == 0 || sweep == config.test_burn_in {
            let theta_units = hl.readout();
            let lps = score_tokens_lda(phi, &theta_units, &hl.tokens, &hl.token_unit);
            let ppl = perplexity(&lps, lps.len())?;
            points.push((sweep, ppl));
        }
    }
    let final_ppl = points.last().expect("burn_in ≥ 1 guarantees a point").1;
    Ok((final_ppl, PerplexityTrace { model: granularity.label().into(), points }))
}

fn score_tokens_lda(
    phi: &[Vec<f64>],
    theta_units: &[Vec<f64>],
    tokens: &[u32],
    token_unit: &[u32],
) -> Vec<f64> {
    par::map_indices(tokens.len(), |i| {
        let w = tokens[i] as usize;
        let th = &theta_units[token_unit[i] as usize];
        let p: f64 = th.iter().zip(phi).map(|(&t, row)| t * row[w]).sum();
        p.ln()
    })
}

// ---------------------------------------------------------------------------
// Exact enumeration oracle
// ---------------------------------------------------------------------------

const MAX_CONFIGS: u64 = 10_000_000;
const ENUM_CHUNK: usize = 4096;

/// Exact posterior over all T^N · S^M assignment configurations.
#[derive(Debug, Clone)]
pub struct Posterior {
    t: usize,
    s: usize,
    n_tokens: usize,
    n_sentences: usize,
    /// P(z, x | w), indexed by [`Posterior::config_index`]; sums to 1.
    pub probabilities: Vec<f64>,
    /// N×T single-site marginals P(z_i = j | w).
    pub z_marginals: Vec<Vec<f64>>,
    /// M×S single-site marginals P(x_s = l | w).
    pub x_marginals: Vec<Vec<f64>>,
}

impl Posterior {
    pub fn n_configs(&self) -> usize {
        self.probabilities.len()
    }

    /// Mixed-radix index: token digits first (token 0 fastest), then
    /// sentence digits.
    pub fn config_index(&self, z: &[u32], x: &[u32]) -> usize {
        debug_assert_eq!(z.len(), self.n_tokens);
        debug_assert_eq!(x.len(), self.n_sentences);
        let mut idx = 0usize;
        for &l in x.iter().rev() {
            idx = idx * self.s + l as usize;
        }
        for &j in z.iter().rev() {
            idx = idx * self.t + j as usize;
        }
        idx
    }

    /// Inverse of [`Posterior::config_index`].
    pub fn decode(&self, index: usize) -> (Vec<u32>, Vec<u32>) {
        let mut z = vec![0u32; self.n_tokens];
        let mut x = vec![0u32; self.n_sentences];
        decode_config(index, self.t, self.s, &mut z, &mut x);
        (z, x)
    }
}

fn decode_config(index: usize, t: usize, s: usize, z: &mut [u32], x: &mut [u32]) {
    let mut c = index;
    for zi in z.iter_mut() {
        *zi = (c % t) as u32;
        c /= t;
    }
    for xi in x.iter_mut() {
        *xi = (c % s) as u32;
        c /= s;
    }
}

/// Enumerates the full posterior of a tiny corpus. Errors with `TooLarge` if
/// T^N · S^M exceeds 10^7 configurations.
pub fn brute_force_posterior(corpus: &Corpus, hyper: &Hyperparams) -> Result<Posterior> {
    hyper.validate()?;
    let flat = FlatView::new(corpus);
    let n = flat.n_tokens();
    let m = flat.n_sentences();
    let mut k: u64 = 1;
    for _ in 0..n {
        k = k.checked_mul(hyper.t as u64).filter(|&k| k <= MAX_CONFIGS).ok_or_else(|| {
            Error::TooLarge(format!("T^{n} · S^{m} exceeds {MAX_CONFIGS} configurations"))
        })?;
    }
    for _ in 0..m {
        k = k.checked_mul(hyper.s as u64).filter(|&k| k <= MAX_CONFIGS).ok_or_else(|| {
            Error::TooLarge(format!("T^{n} · S^{m} exceeds {MAX_CONFIGS} configurations"))
        })?;
    }
    let k = k as usize;
    let v = corpus.vocab_size();
    let docs = corpus.n_documents();
    let h = *hyper;

    let n_chunks = k.div_ceil(ENUM_CHUNK);
    let chunks: Vec<Vec<f64>> = par::map_indices(n_chunks, |ci| {
        let lo = ci * ENUM_CHUNK;
        let hi = (lo + ENUM_CHUNK).min(k);
        let mut z = vec![0u32; n];
        let mut x = vec![0u32; m];
        let mut counts = CountTables::new(h.t, h.s, v, docs);
        let mut out = Vec::with_capacity(hi - lo);
        for c in lo..hi {
            decode_config(c, h.t, h.s, &mut z, &mut x);
            counts.reset();
            counts.tabulate_into(&flat, &z, &x);
            out.push(joint_log_prob_counts(&counts, &h));
        }
        out
    });
    let log_probs: Vec<f64> = chunks.into_iter().flatten().collect();

    // Sequential log-sum-exp and normalization keep the result independent of
    // thread count.
    let max = log_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for &lp in &log_probs {
        total += (lp - max).exp();
    }
    let lse = max + total.ln();
    let probabilities: Vec<f64> = log_probs.iter().map(|&lp| (lp - lse).exp()).collect();

    let mut z_marginals = vec![vec![0.0; h.t]; n];
    let mut x_marginals = vec![vec![0.0; h.s]; m];
    let mut z = vec![0u32; n];
    let mut x = vec![0u32; m];
    for (c, &p) in probabilities.iter().enumerate() {
        decode_config(c, h.t, h.s, &mut z, &mut x);
        for (i, &j) in z.iter().enumerate() {
            z_marginals[i][j as usize] += p;
        }
        for (si, &l) in x.iter().enumerate() {
            x_marginals[si][l as usize] += p;
        }
    }

    Ok(Posterior {
        t: h.t,
        s: h.s,
        n_tokens: n,
        n_sentences: m,
        probabilities,
        z_marginals,
        x_marginals,
    })
}

// ---------------------------------------------------------------------------
// Recovery diagnostics
// ---------------------------------------------------------------------------

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let na: f64 = a.iter().map(|p| p * p).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|p| p * p).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Mean cosine similarity between `estimated` and `truth` rows under the
/// one-to-one row matching that maximizes it, found exactly by dynamic
/// programming over assigned-row subsets (rows are topic distributions, whose
/// labels are not identified, so any fixed pairing would be meaningless).
/// Feasible for the row counts used here (2^T states); both matrices must be
/// the same shape.
pub fn best_permutation_mean_cosine(estimated: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    let t = truth.len();
    if t == 0 || estimated.len() != t {
        return Err(Error::Domain(format!(
            "row-matching needs equal non-empty row counts, got {} and {}",
            estimated.len(),
            t
        )));
    }
    if t > 20 {
        return Err(Error::TooLarge(format!(
            "subset matching over {t} rows exceeds the 2^20-state budget"
        )));
    }
    let width = truth[0].len();
    if estimated.iter().chain(truth).any(|row| row.len() != width) {
        return Err(Error::Domain("row-matching given ragged matrices".into()));
    }
    let sims: Vec<Vec<f64>> = estimated
        .iter()
        .map(|e| truth.iter().map(|row| cosine(e, row)).collect())
        .collect();
    // dp[mask] = best total over the first popcount(mask) estimated rows,
    // with `mask` the set of truth rows already used.
    let full = 1usize << t;
    let mut dp = vec![f64::NEG_INFINITY; full];
    dp[0] = 0.0;
    for mask in 0..full {
        if dp[mask] == f64::NEG_INFINITY {
            continue;
        }
        let k = mask.count_ones() as usize;
        if k == t {
            continue;
        }
        for (j, sim) in sims[k].iter().enumerate() {
            if mask & (1 << j) == 0 {
                let next = mask | (1 << j);
                let cand = dp[mask] + sim;
                if cand > dp[next] {
                    dp[next] = cand;
                }
            }
        }
    }
    Ok(dp[full - 1] / t as f64)
}

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

/// The parameters and assignments a synthetic corpus was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub phi: Vec<Vec<f64>>,
    pub tau: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    /// Sentence topics, per document.
    pub x: Vec<Vec<u32>>,
    /// Word topics, per document per sentence.
    pub z: Vec<Vec<Vec<u32>>>,
}

/// Symmetric-Dirichlet draw by gamma normalization, retrying the (measure
/// zero, but floating-point real) case where every gamma underflows to 0.
fn dirichlet(rng: &mut RngStream, concentration: f64, k: usize) -> Result<Vec<f64>> {
    let gamma = rand_distr::Gamma::new(concentration, 1.0)
        .map_err(|e| Error::Domain(format!("invalid Dirichlet concentration: {e}")))?;
    for _ in 0..100 {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return Ok(draws.into_iter().map(|g| g / total).collect());
        }
    }
    Err(Error::DegenerateDistribution)
}

/// Samples a corpus from the generative model: θ_d ~ Dir(α), τ_l ~ Dir(γ),
/// φ_j ~ Dir(β), then x ~ Cat(θ), z ~ Cat(τ_x), w ~ Cat(φ_z). Tokens are
/// named `w000…`, documents `d000…` (zero-padded). Returns the corpus and the
/// generating truth.
pub fn generate_synthetic(
    hyper: &Hyperparams,
    n_docs: usize,
    sentences_per_doc: usize,
    words_per_sentence: usize,
    v: usize,
    seed: u64,
) -> Result<(Corpus, SyntheticTruth)> {
    hyper.validate()?;
    if n_docs == 0 || sentences_per_doc == 0 || words_per_sentence == 0 || v == 0 {
        return Err(Error::Domain(
            "documents, sentences, words per sentence, and vocabulary must all be ≥ 1".into(),
        ));
    }
    let mut rng = RngStream::new(seed);
    let phi: Vec<Vec<f64>> = (0..hyper.t)
        .map(|_| dirichlet(&mut rng, hyper.beta, v))
        .collect::<Result<_>>()?;
    let tau: Vec<Vec<f64>> = (0..hyper.s)
        .map(|_| dirichlet(&mut rng, hyper.gamma, hyper.t))
        .collect::<Result<_>>()?;
    let theta: Vec<Vec<f64>> = (0..n_docs)
        .map(|_| dirichlet(&mut rng, hyper.alpha, hyper.s))
        .collect::<Result<_>>()?;

    let word_width = (v - 1).max(1).to_string().len();
    let doc_width = (n_docs - 1).max(1).to_string().len();

    let mut frequencies = vec![0u64; v];
    let mut documents = Vec::with_capacity(n_docs);
    let mut truth_x = Vec::with_capacity(n_docs);
    let mut truth_z = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let mut sentences = Vec::with_capacity(sentences_per_doc);
        let mut doc_x = Vec::with_capacity(sentences_per_doc);
        let mut doc_z = Vec::with_capacity(sentences_per_doc);
        for _ in 0..sentences_per_doc {
            let l = sample_categorical(&theta[d], &mut rng)?;
            let mut sent = Vec::with_capacity(words_per_sentence);
            let mut sent_z = Vec::with_capacity(words_per_sentence);
            for _ in 0..words_per_sentence {
                let j = sample_categorical(&tau[l], &mut rng)?;
                let w = sample_categorical(&phi[j], &mut rng)?;
                frequencies[w] += 1;
                sent.push(w as u32);
                sent_z.push(j as u32);
            }
            sentences.push(sent);
            doc_x.push(l as u32);
            doc_z.push(sent_z);
        }
        documents.push(Document { id: format!("d{d:0doc_width$}"), sentences });
        truth_x.push(doc_x);
        truth_z.push(doc_z);
    }

    let tokens: Vec<String> = (0..v).map(|w| format!("w{w:0word_width$}")).collect();
    let vocab = Arc::new(Vocabulary::from_tokens(tokens, frequencies)?);
    let corpus = corpus_from_encoded(documents, vocab)?;
    Ok((corpus, SyntheticTruth { phi, tau, theta, x: truth_x, z: truth_z }))
}
