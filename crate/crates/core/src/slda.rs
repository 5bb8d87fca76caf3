//! Collapsed Gibbs sampler for sentence-layered LDA: a three-level model in
//! which each document draws a distribution θ over sentence topics, each
//! sentence topic carries a distribution τ over word topics, and each word
//! topic carries a distribution φ over the vocabulary. All three Dirichlet
//! levels are integrated out; only the discrete assignments (z per token,
//! x per sentence) are resampled.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FlatView};
use crate::error::{Error, Result};
use crate::math::{self, LogWeights};
use crate::rng::{sample_categorical, RngStream, RNG_KIND};

/// Symmetric Dirichlet scalars and topic counts for the three-level model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Sentence-topic count.
    pub s: usize,
    /// Word-topic count.
    pub t: usize,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be a positive real, got {v}")));
            }
        }
        if self.s < 1 || self.t < 1 {
            return Err(Error::Domain(format!(
                "topic counts must be ≥ 1, got S = {}, T = {}",
                self.s, self.t
            )));
        }
        Ok(())
    }
}

/// All sufficient statistics for collapsed sampling. Exclusion counts
/// (the n_{−i}/n_{−x} quantities in the conditionals) are obtained by
/// decrement-before-sample, never stored separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTables {
    t: usize,
    s: usize,
    v: usize,
    docs: usize,
    /// T×V: tokens of word w assigned word topic j.
    n_tw: Vec<u32>,
    /// Row sums of n_tw.
    n_t: Vec<u32>,
    /// S×T: tokens of word topic j inside sentences of sentence topic l.
    n_st: Vec<u32>,
    /// Row sums of n_st.
    n_s: Vec<u32>,
    /// L×S: sentences of topic l in document d.
    n_ds: Vec<u32>,
    /// Row sums of n_ds (= sentence count per document).
    n_d: Vec<u32>,
}

impl CountTables {
    /// All-zero tables for T word topics, S sentence topics, V words, and
    /// `docs` documents.
    pub fn new(t: usize, s: usize, v: usize, docs: usize) -> Self {
        Self {
            t,
            s,
            v,
            docs,
            n_tw: vec![0; t * v],
            n_t: vec![0; t],
            n_st: vec![0; s * t],
            n_s: vec![0; s],
            n_ds: vec![0; docs * s],
            n_d: vec![0; docs],
        }
    }

    pub fn reset(&mut self) {
        self.n_tw.fill(0);
        self.n_t.fill(0);
        self.n_st.fill(0);
        self.n_s.fill(0);
        self.n_ds.fill(0);
        self.n_d.fill(0);
    }

    /// Adds the full tabulation of the given assignments. Callers pass tables
    /// that were just reset; indices must be in range (debug-checked).
    pub fn tabulate_into(&mut self, flat: &FlatView, z: &[u32], x: &[u32]) {
        debug_assert_eq!(z.len(), flat.n_tokens());
        debug_assert_eq!(x.len(), flat.n_sentences());
        for (i, &w) in flat.tokens.iter().enumerate() {
            let j = z[i] as usize;
            let l = x[flat.token_sent[i] as usize] as usize;
            self.n_tw[j * self.v + w as usize] += 1;
            self.n_t[j] += 1;
            self.n_st[l * self.t + j] += 1;
            self.n_s[l] += 1;
        }
        for (s, &d) in flat.sent_doc.iter().enumerate() {
            let l = x[s] as usize;
            self.n_ds[d as usize * self.s + l] += 1;
            self.n_d[d as usize] += 1;
        }
    }

    #[inline]
    pub fn n_tw(&self, j: usize, w: usize) -> u32 {
        self.n_tw[j * self.v + w]
    }
    #[inline]
    pub fn n_t(&self, j: usize) -> u32 {
        self.n_t[j]
    }
    #[inline]
    pub fn n_st(&self, l: usize, j: usize) -> u32 {
        self.n_st[l * self.t + j]
    }
    #[inline]
    pub fn n_s(&self, l: usize) -> u32 {
        self.n_s[l]
    }
    #[inline]
    pub fn n_ds(&self, d: usize, l: usize) -> u32 {
        self.n_ds[d * self.s + l]
    }
    #[inline]
    pub fn n_d(&self, d: usize) -> u32 {
        self.n_d[d]
    }

    /// Checks the marginal identities: n_t = row sums of n_tw, n_s = row sums
    /// of n_st, n_d = row sums of n_ds, Σ n_t = Σ n_s, and Σ n_d = sentence
    /// total implied by n_ds.
    pub fn verify_marginals(&self) -> Result<()> {
        for j in 0..self.t {
            let sum: u32 = (0..self.v).map(|w| self.n_tw(j, w)).sum();
            if sum != self.n_t[j] {
                return Err(Error::Inconsistency(format!(
                    "n_t[{j}] = {} but row sums to {sum}",
                    self.n_t[j]
                )));
            }
        }
        for l in 0..self.s {
            let sum: u32 = (0..self.t).map(|j| self.n_st(l, j)).sum();
            if sum != self.n_s[l] {
                return Err(Error::Inconsistency(format!(
                    "n_s[{l}] = {} but row sums to {sum}",
                    self.n_s[l]
                )));
            }
        }
        for d in 0..self.docs {
            let sum: u32 = (0..self.s).map(|l| self.n_ds(d, l)).sum();
            if sum != self.n_d[d] {
                return Err(Error::Inconsistency(format!(
                    "n_d[{d}] = {} but row sums to {sum}",
                    self.n_d[d]
                )));
            }
        }
        let total_t: u64 = self.n_t.iter().map(|&c| u64::from(c)).sum();
        let total_s: u64 = self.n_s.iter().map(|&c| u64::from(c)).sum();
        if total_t != total_s {
            return Err(Error::Inconsistency(format!(
                "Σ n_t = {total_t} ≠ Σ n_s = {total_s}"
            )));
        }
        Ok(())
    }
}

#[inline]
fn dec(v: &mut [u32], i: usize) -> Result<()> {
    v[i] = v[i]
        .checked_sub(1)
        .ok_or_else(|| Error::Inconsistency(format!("count underflow at index {i}")))?;
    Ok(())
}

/// Posterior-mean parameter estimates read out from one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    /// T×V, word topic → word.
    pub phi: Vec<Vec<f64>>,
    /// S×T, sentence topic → word topic.
    pub tau: Vec<Vec<f64>>,
    /// L×S, document → sentence topic.
    pub theta: Vec<Vec<f64>>,
}

/// Mutable chain state: corpus view, assignments, counts, and the RNG stream.
/// Single-owner; one chain runs on one thread.
#[derive(Debug, Clone)]
pub struct SamplerState {
    corpus: Arc<Corpus>,
    hyper: Hyperparams,
    rng: RngStream,
    flat: FlatView,
    /// Word-topic assignment per token.
    z: Vec<u32>,
    /// Sentence-topic assignment per sentence.
    x: Vec<u32>,
    counts: CountTables,
    sweep: u64,
}

impl SamplerState {
    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }
    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }
    pub fn counts(&self) -> &CountTables {
        &self.counts
    }
    pub fn z(&self) -> &[u32] {
        &self.z
    }
    pub fn x(&self) -> &[u32] {
        &self.x
    }
    pub fn sweep_count(&self) -> u64 {
        self.sweep
    }
    pub fn n_tokens(&self) -> usize {
        self.flat.n_tokens()
    }
    pub fn n_sentences(&self) -> usize {
        self.x.len()
    }
    /// Vocabulary id of token `i` (flat corpus order).
    pub fn word_at(&self, i: usize) -> u32 {
        self.flat.tokens[i]
    }
    /// Global sentence index of token `i`.
    pub fn sentence_of(&self, i: usize) -> usize {
        self.flat.token_sent[i] as usize
    }
    /// Document index of sentence `s`.
    pub fn document_of(&self, s: usize) -> usize {
        self.flat.sent_doc[s] as usize
    }

    /// Overwrites assignments and retabulates counts. For tests and oracles
    /// that need to place the chain in a chosen configuration.
    pub fn set_assignments(&mut self, z: &[u32], x: &[u32]) -> Result<()> {
        if z.len() != self.z.len() || x.len() != self.x.len() {
            return Err(Error::Domain(format!(
                "assignment lengths ({}, {}) do not match corpus ({}, {})",
                z.len(),
                x.len(),
                self.z.len(),
                self.x.len()
            )));
        }
        let t = self.hyper.t as u32;
        let s = self.hyper.s as u32;
        if z.iter().any(|&j| j >= t) || x.iter().any(|&l| l >= s) {
            return Err(Error::Domain("assignment out of topic range".into()));
        }
        self.z.copy_from_slice(z);
        self.x.copy_from_slice(x);
        self.counts = self.recount();
        Ok(())
    }

    /// Fresh tabulation of the count tables from the current assignments.
    pub fn recount(&self) -> CountTables {
        let mut c = CountTables::new(
            self.hyper.t,
            self.hyper.s,
            self.corpus.vocab_size(),
            self.corpus.n_documents(),
        );
        c.tabulate_into(&self.flat, &self.z, &self.x);
        c
    }

    /// Full invariant check: recount equals stored tables (integer equality)
    /// and all marginal identities hold.
    pub fn verify_counts(&self) -> Result<()> {
        if self.recount() != self.counts {
            return Err(Error::Inconsistency(
                "stored count tables differ from a fresh recount".into(),
            ));
        }
        self.counts.verify_marginals()
    }

    /// Removes token `i`'s contribution from the counts (exclusion counts for
    /// its z-site take effect).
    pub fn decrement_token(&mut self, i: usize) -> Result<()> {
        let w = self.flat.tokens[i] as usize;
        let j = self.z[i] as usize;
        let l = self.x[self.flat.token_sent[i] as usize] as usize;
        let c = &mut self.counts;
        dec(&mut c.n_tw, j * c.v + w)?;
        dec(&mut c.n_t, j)?;
        dec(&mut c.n_st, l * c.t + j)?;
        dec(&mut c.n_s, l)?;
        Ok(())
    }

    /// Assigns token `i` to word topic `j` and adds its contribution back.
    pub fn increment_token(&mut self, i: usize, j: u32) {
        let w = self.flat.tokens[i] as usize;
        let l = self.x[self.flat.token_sent[i] as usize] as usize;
        self.z[i] = j;
        let j = j as usize;
        let c = &mut self.counts;
        c.n_tw[j * c.v + w] += 1;
        c.n_t[j] += 1;
        c.n_st[l * c.t + j] += 1;
        c.n_s[l] += 1;
    }

    /// Removes sentence `s` from the document table AND removes its words'
    /// word-topic mass from n_st/n_s under its current topic. Both removals
    /// are required before evaluating the x-conditional: the sentence's words
    /// appear in the conditional's increment vector, so leaving them in the
    /// base counts would double-count them.
    pub fn decrement_sentence(&mut self, s: usize) -> Result<()> {
        let l = self.x[s] as usize;
        let d = self.flat.sent_doc[s] as usize;
        {
            let c = &mut self.counts;
            dec(&mut c.n_ds, d * c.s + l)?;
            dec(&mut c.n_d, d)?;
        }
        for i in self.flat.sentence_span(s) {
            let j = self.z[i] as usize;
            let c = &mut self.counts;
            dec(&mut c.n_st, l * c.t + j)?;
            dec(&mut c.n_s, l)?;
        }
        Ok(())
    }

    /// Assigns sentence `s` to topic `l` and adds back its document count and
    /// its words' word-topic mass.
    pub fn increment_sentence(&mut self, s: usize, l: u32) {
        let d = self.flat.sent_doc[s] as usize;
        self.x[s] = l;
        let l = l as usize;
        let c = &mut self.counts;
        c.n_ds[d * c.s + l] += 1;
        c.n_d[d] += 1;
        for i in self.flat.sentence_span(s) {
            let j = self.z[i] as usize;
            let c = &mut self.counts;
            c.n_st[l * c.t + j] += 1;
            c.n_s[l] += 1;
        }
    }

    /// Unnormalized conditional for token `i`'s word topic. The token's own
    /// contribution must already be removed (decrement-before-sample):
    ///
    ///   weight_j = (β + n_{−i,j}^{(w_i)}) / (Vβ + n_{−i,j}^{(·)})
    ///            × (γ + n_{−i,x}^{(j)})  / (Tγ + n_{−i,x}^{(·)}),
    ///
    /// where x is the topic of the token's sentence.
    pub fn conditional_z(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.hyper.t];
        self.conditional_z_into(i, &mut out);
        out
    }

    fn conditional_z_into(&self, i: usize, out: &mut [f64]) {
        let h = &self.hyper;
        let c = &self.counts;
        let w = self.flat.tokens[i] as usize;
        let l = self.x[self.flat.token_sent[i] as usize] as usize;
        let vbeta = c.v as f64 * h.beta;
        let tgamma = h.t as f64 * h.gamma;
        let sent_denom = tgamma + f64::from(c.n_s[l]);
        for j in 0..h.t {
            let word = (h.beta + f64::from(c.n_tw[j * c.v + w]))
                / (vbeta + f64::from(c.n_t[j]));
            let sent = (h.gamma + f64::from(c.n_st[l * c.t + j])) / sent_denom;
            out[j] = word * sent;
        }
    }

    /// Log-scale conditional for sentence `s`'s topic. The sentence's document
    /// count and word-topic mass must already be removed:
    ///
    ///   logweight_l = ln B({γ + n_{−x,l}^{(z)}} + m) − ln B({γ + n_{−x,l}^{(z)}})
    ///               + ln(α + n_{−x,d}^{(l)}) − ln(Sα + n_{−x,d}^{(·)}),
    ///
    /// with m the sentence's word-topic histogram; the beta ratio is computed
    /// by rising-factorial log-sums.
    pub fn conditional_x(&self, s: usize) -> Result<LogWeights> {
        let mut hist = vec![0u32; self.hyper.t];
        self.sentence_histogram(s, &mut hist);
        let mut base = vec![0.0; self.hyper.t];
        let mut out = vec![0.0; self.hyper.s];
        self.conditional_x_into(s, &hist, &mut base, &mut out)?;
        LogWeights::new(out)
    }

    fn sentence_histogram(&self, s: usize, hist: &mut [u32]) {
        hist.fill(0);
        for i in self.flat.sentence_span(s) {
            hist[self.z[i] as usize] += 1;
        }
    }

    fn conditional_x_into(
        &self,
        s: usize,
        hist: &[u32],
        base: &mut [f64],
        out: &mut [f64],
    ) -> Result<()> {
        let h = &self.hyper;
        let c = &self.counts;
        let d = self.flat.sent_doc[s] as usize;
        let doc_denom = (h.s as f64 * h.alpha + f64::from(c.n_d[d])).ln();
        for l in 0..h.s {
            for j in 0..h.t {
                base[j] = h.gamma + f64::from(c.n_st[l * c.t + j]);
            }
            out[l] = math::log_multibeta_ratio(base, hist)?
                + (h.alpha + f64::from(c.n_ds[d * c.s + l])).ln()
                - doc_denom;
        }
        Ok(())
    }

    /// One full Gibbs sweep: every token's z is resampled in corpus order
    /// (decrement → conditional → draw → increment), then every sentence's x.
    pub fn gibbs_sweep(&mut self) -> Result<()> {
        let t = self.hyper.t;
        let s = self.hyper.s;
        let mut weights = vec![0.0; t];
        for i in 0..self.flat.n_tokens() {
            self.decrement_token(i)?;
            self.conditional_z_into(i, &mut weights);
            let j = sample_categorical(&weights, &mut self.rng)?;
            self.increment_token(i, j as u32);
        }
        let mut hist = vec![0u32; t];
        let mut base = vec![0.0; t];
        let mut logw = vec![0.0; s];
        for si in 0..self.x.len() {
            self.decrement_sentence(si)?;
            self.sentence_histogram(si, &mut hist);
            self.conditional_x_into(si, &hist, &mut base, &mut logw)?;
            normalize_log_in_place(&mut logw)?;
            let l = sample_categorical(&logw, &mut self.rng)?;
            self.increment_sentence(si, l as u32);
        }
        self.sweep += 1;
        Ok(())
    }

    /// ln P(w, z, x | α, β, γ) up to the model constant: the collapsed
    /// Dirichlet-multinomial marginal summed over the three levels.
    pub fn joint_log_prob(&self) -> f64 {
        joint_log_prob_counts(&self.counts, &self.hyper)
    }

    /// Posterior-mean readout of φ, τ, θ from the current counts.
    pub fn estimate_model(&self) -> Model {
        let h = &self.hyper;
        let c = &self.counts;
        let phi = (0..h.t)
            .map(|j| {
                let denom = c.v as f64 * h.beta + f64::from(c.n_t[j]);
                (0..c.v)
                    .map(|w| (h.beta + f64::from(c.n_tw[j * c.v + w])) / denom)
                    .collect()
            })
            .collect();
        let tau = (0..h.s)
            .map(|l| {
                let denom = h.t as f64 * h.gamma + f64::from(c.n_s[l]);
                (0..h.t)
                    .map(|j| (h.gamma + f64::from(c.n_st[l * c.t + j])) / denom)
                    .collect()
            })
            .collect();
        let theta = (0..c.docs)
            .map(|d| {
                let denom = h.s as f64 * h.alpha + f64::from(c.n_d[d]);
                (0..h.s)
                    .map(|l| (h.alpha + f64::from(c.n_ds[d * c.s + l])) / denom)
                    .collect()
            })
            .collect();
        Model { phi, tau, theta }
    }
}

/// In-place max-shift exponentiation of log weights (allocation-free twin of
/// [`math::normalize_log_weights`] for the sweep hot path).
fn normalize_log_in_place(w: &mut [f64]) -> Result<()> {
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateDistribution);
    }
    for v in w.iter_mut() {
        *v = (*v - max).exp();
    }
    Ok(())
}

/// The collapsed joint over counts:
///
///   Σ_j [ln B({β + n_j^{(w)}}_w) − ln B(β·1_V)]
/// + Σ_l [ln B({γ + n_l^{(j)}}_j) − ln B(γ·1_T)]
/// + Σ_d [ln B({α + n_d^{(l)}}_l) − ln B(α·1_S)].
pub fn joint_log_prob_counts(c: &CountTables, h: &Hyperparams) -> f64 {
    let mut lp = 0.0;

    let base_v = c.v as f64 * math::ln_gamma(h.beta) - math::ln_gamma(c.v as f64 * h.beta);
    for j in 0..c.t {
        let mut row = -base_v;
        for w in 0..c.v {
            row += math::ln_gamma(h.beta + f64::from(c.n_tw[j * c.v + w]));
        }
        row -= math::ln_gamma(c.v as f64 * h.beta + f64::from(c.n_t[j]));
        lp += row;
    }

    let base_t = c.t as f64 * math::ln_gamma(h.gamma) - math::ln_gamma(c.t as f64 * h.gamma);
    for l in 0..c.s {
        let mut row = -base_t;
        for j in 0..c.t {
            row += math::ln_gamma(h.gamma + f64::from(c.n_st[l * c.t + j]));
        }
        row -= math::ln_gamma(c.t as f64 * h.gamma + f64::from(c.n_s[l]));
        lp += row;
    }

    let base_s = c.s as f64 * math::ln_gamma(h.alpha) - math::ln_gamma(c.s as f64 * h.alpha);
    for d in 0..c.docs {
        let mut row = -base_s;
        for l in 0..c.s {
            row += math::ln_gamma(h.alpha + f64::from(c.n_ds[d * c.s + l]));
        }
        row -= math::ln_gamma(c.s as f64 * h.alpha + f64::from(c.n_d[d]));
        lp += row;
    }

    lp
}

/// Uniform-random initial assignments (all z in corpus order, then all x),
/// with counts tabulated to match.
pub fn init_state(corpus: Arc<Corpus>, hyper: Hyperparams, mut rng: RngStream) -> Result<SamplerState> {
    hyper.validate()?;
    let flat = FlatView::new(&corpus);
    let z: Vec<u32> = (0..flat.n_tokens())
        .map(|_| rng.uniform_index(hyper.t) as u32)
        .collect();
    let x: Vec<u32> = (0..flat.n_sentences())
        .map(|_| rng.uniform_index(hyper.s) as u32)
        .collect();
    let mut state = SamplerState {
        corpus,
        hyper,
        rng,
        flat,
        z,
        x,
        counts: CountTables::new(0, 0, 0, 0),
        sweep: 0,
    };
    state.counts = state.recount();
    Ok(state)
}

/// Trains by running `burn_in` sweeps from a fresh uniform initialization and
/// reading out a single posterior-mean sample. Returns the model and the
/// joint log-probability after each sweep.
pub fn train(
    corpus: &Arc<Corpus>,
    hyper: Hyperparams,
    burn_in: u32,
    seed: u64,
) -> Result<(Model, Vec<f64>)> {
    if burn_in < 1 {
        return Err(Error::Domain("burn_in must be ≥ 1".into()));
    }
    let mut state = init_state(Arc::clone(corpus), hyper, RngStream::new(seed))?;
    let mut trace = Vec::with_capacity(burn_in as usize);
    for _ in 0..burn_in {
        state.gibbs_sweep()?;
        trace.push(state.joint_log_prob());
    }
    Ok((state.estimate_model(), trace))
}

/// [`train`] without the per-sweep trace; identical sample path and model for
/// a given seed. Used where the trace would dominate runtime (grid cells).
pub fn train_quiet(
    corpus: &Arc<Corpus>,
    hyper: Hyperparams,
    burn_in: u32,
    seed: u64,
) -> Result<Model> {
    if burn_in < 1 {
        return Err(Error::Domain("burn_in must be ≥ 1".into()));
    }
    let mut state = init_state(Arc::clone(corpus), hyper, RngStream::new(seed))?;
    for _ in 0..burn_in {
        state.gibbs_sweep()?;
    }
    Ok(state.estimate_model())
}

// ---------------------------------------------------------------------------
// Model file format
// ---------------------------------------------------------------------------

pub const SLDA_FORMAT: &str = "slda-model/1";

/// On-disk model: hyperparameters, seed, vocabulary, and the three estimated
/// matrices. The embedded vocabulary makes evaluation self-contained; `rng`
/// records the generator family for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SldaModelFile {
    pub format: String,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub seed: u64,
    pub burn_in: u32,
    pub rng: String,
    pub vocab: Vec<String>,
    pub phi: Vec<Vec<f64>>,
    pub tau: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
}

impl SldaModelFile {
    pub fn new(
        model: Model,
        hyper: &Hyperparams,
        seed: u64,
        burn_in: u32,
        vocab: Vec<String>,
    ) -> Self {
        Self {
            format: SLDA_FORMAT.to_string(),
            s: hyper.s,
            t: hyper.t,
            v: vocab.len(),
            alpha: hyper.alpha,
            beta: hyper.beta,
            gamma: hyper.gamma,
            seed,
            burn_in,
            rng: RNG_KIND.to_string(),
            vocab,
            phi: model.phi,
            tau: model.tau,
            theta: model.theta,
        }
    }

    pub fn hyper(&self) -> Hyperparams {
        Hyperparams {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            s: self.s,
            t: self.t,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.format != SLDA_FORMAT {
            return Err(Error::Domain(format!(
                "expected format {SLDA_FORMAT:?}, found {:?}",
                m.format
            )));
        }
        Ok(m)
    }
}
