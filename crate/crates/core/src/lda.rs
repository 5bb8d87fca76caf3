//! Collapsed Gibbs sampler for standard (two-level) LDA, used as the baseline
//! family. The model runs over generic *units*: either whole documents
//! (labelled `lda.doc`) or individual sentences treated as mini-documents
//! (labelled `lda`). Everything else — priors, conditionals, readout — is the
//! textbook collapsed sampler.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{sample_categorical, RngStream, RNG_KIND};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaHyper {
    pub alpha: f64,
    pub beta: f64,
    /// Word-topic count.
    pub t: usize,
}

impl LdaHyper {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be a positive real, got {v}")));
            }
        }
        if self.t < 1 {
            return Err(Error::Domain(format!("topic count must be ≥ 1, got T = {}", self.t)));
        }
        Ok(())
    }
}

/// What counts as one exchangeable unit for the document-topic table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Document,
    Sentence,
}

impl Granularity {
    /// Short label used in traces and comparisons.
    pub fn label(self) -> &'static str {
        match self {
            Granularity::Document => "lda.doc",
            Granularity::Sentence => "lda",
        }
    }

    /// Name used in the model file's `granularity` field.
    pub fn field_name(self) -> &'static str {
        match self {
            Granularity::Document => "document",
            Granularity::Sentence => "sentence",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "document" => Ok(Granularity::Document),
            "sentence" => Ok(Granularity::Sentence),
            other => Err(Error::Domain(format!(
                "unknown granularity {other:?} (expected \"document\" or \"sentence\")"
            ))),
        }
    }
}

/// Flattens a corpus into units under the given granularity, preserving
/// corpus order. Document units concatenate the document's sentences.
pub fn as_units(corpus: &Corpus, granularity: Granularity) -> Vec<Vec<u32>> {
    match granularity {
        Granularity::Document => corpus
            .documents()
            .iter()
            .map(|d| d.sentences.iter().flatten().copied().collect())
            .collect(),
        Granularity::Sentence => corpus
            .documents()
            .iter()
            .flat_map(|d| d.sentences.iter().cloned())
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdaCounts {
    t: usize,
    v: usize,
    units: usize,
    n_tw: Vec<u32>,
    n_t: Vec<u32>,
    /// U×T: tokens of unit u assigned topic j.
    n_uz: Vec<u32>,
    /// Row sums of n_uz (= unit lengths).
    n_u: Vec<u32>,
}

impl LdaCounts {
    fn zeroed(t: usize, v: usize, units: usize) -> Self {
        Self {
            t,
            v,
            units,
            n_tw: vec![0; t * v],
            n_t: vec![0; t],
            n_uz: vec![0; units * t],
            n_u: vec![0; units],
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
    pub fn n_uz(&self, u: usize, j: usize) -> u32 {
        self.n_uz[u * self.t + j]
    }
    #[inline]
    pub fn n_u(&self, u: usize) -> u32 {
        self.n_u[u]
    }

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
        for u in 0..self.units {
            let sum: u32 = (0..self.t).map(|j| self.n_uz(u, j)).sum();
            if sum != self.n_u[u] {
                return Err(Error::Inconsistency(format!(
                    "n_u[{u}] = {} but row sums to {sum}",
                    self.n_u[u]
                )));
            }
        }
        let total_t: u64 = self.n_t.iter().map(|&c| u64::from(c)).sum();
        let total_u: u64 = self.n_u.iter().map(|&c| u64::from(c)).sum();
        if total_t != total_u {
            return Err(Error::Inconsistency(format!(
                "Σ n_t = {total_t} ≠ Σ n_u = {total_u}"
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

#[derive(Debug, Clone)]
pub struct LdaState {
    hyper: LdaHyper,
    v: usize,
    rng: RngStream,
    tokens: Vec<u32>,
    token_unit: Vec<u32>,
    z: Vec<u32>,
    counts: LdaCounts,
    sweep: u64,
}

impl LdaState {
    pub fn hyper(&self) -> &LdaHyper {
        &self.hyper
    }
    pub fn counts(&self) -> &LdaCounts {
        &self.counts
    }
    pub fn z(&self) -> &[u32] {
        &self.z
    }
    pub fn sweep_count(&self) -> u64 {
        self.sweep
    }
    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }
    pub fn n_units(&self) -> usize {
        self.counts.units
    }
    pub fn word_at(&self, i: usize) -> u32 {
        self.tokens[i]
    }
    pub fn unit_of(&self, i: usize) -> usize {
        self.token_unit[i] as usize
    }

    pub fn set_assignments(&mut self, z: &[u32]) -> Result<()> {
        if z.len() != self.z.len() {
            return Err(Error::Domain(format!(
                "assignment length {} does not match token count {}",
                z.len(),
                self.z.len()
            )));
        }
        if z.iter().any(|&j| j as usize >= self.hyper.t) {
            return Err(Error::Domain("assignment out of topic range".into()));
        }
        self.z.copy_from_slice(z);
        self.counts = self.recount();
        Ok(())
    }

    pub fn recount(&self) -> LdaCounts {
        let mut c = LdaCounts::zeroed(self.hyper.t, self.v, self.counts.units);
        for (i, &w) in self.tokens.iter().enumerate() {
            let j = self.z[i] as usize;
            let u = self.token_unit[i] as usize;
            c.n_tw[j * c.v + w as usize] += 1;
            c.n_t[j] += 1;
            c.n_uz[u * c.t + j] += 1;
            c.n_u[u] += 1;
        }
        c
    }

    pub fn verify_counts(&self) -> Result<()> {
        if self.recount() != self.counts {
            return Err(Error::Inconsistency(
                "stored count tables differ from a fresh recount".into(),
            ));
        }
        self.counts.verify_marginals()
    }

    pub fn decrement_token(&mut self, i: usize) -> Result<()> {
        let w = self.tokens[i] as usize;
        let j = self.z[i] as usize;
        let u = self.token_unit[i] as usize;
        let c = &mut self.counts;
        dec(&mut c.n_tw, j * c.v + w)?;
        dec(&mut c.n_t, j)?;
        dec(&mut c.n_uz, u * c.t + j)?;
        dec(&mut c.n_u, u)?;
        Ok(())
    }

    pub fn increment_token(&mut self, i: usize, j: u32) {
        let w = self.tokens[i] as usize;
        let u = self.token_unit[i] as usize;
        self.z[i] = j;
        let j = j as usize;
        let c = &mut self.counts;
        c.n_tw[j * c.v + w] += 1;
        c.n_t[j] += 1;
        c.n_uz[u * c.t + j] += 1;
        c.n_u[u] += 1;
    }

    /// Unnormalized collapsed conditional for token `i` (must already be
    /// decremented):
    ///
    ///   weight_j = (β + n_{−i,j}^{(w_i)}) / (Vβ + n_{−i,j}^{(·)})
    ///            × (α + n_{−i,u}^{(j)})  / (Tα + n_{−i,u}^{(·)}).
    pub fn conditional_z(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.hyper.t];
        self.conditional_z_into(i, &mut out);
        out
    }

    fn conditional_z_into(&self, i: usize, out: &mut [f64]) {
        let h = &self.hyper;
        let c = &self.counts;
        let w = self.tokens[i] as usize;
        let u = self.token_unit[i] as usize;
        let vbeta = c.v as f64 * h.beta;
        let talpha = h.t as f64 * h.alpha;
        let unit_denom = talpha + f64::from(c.n_u[u]);
        for j in 0..h.t {
            let word = (h.beta + f64::from(c.n_tw[j * c.v + w]))
                / (vbeta + f64::from(c.n_t[j]));
            let unit = (h.alpha + f64::from(c.n_uz[u * c.t + j])) / unit_denom;
            out[j] = word * unit;
        }
    }

    /// One sweep over all tokens in corpus order.
    pub fn gibbs_sweep(&mut self) -> Result<()> {
        let mut weights = vec![0.0; self.hyper.t];
        for i in 0..self.tokens.len() {
            self.decrement_token(i)?;
            self.conditional_z_into(i, &mut weights);
            let j = sample_categorical(&weights, &mut self.rng)?;
            self.increment_token(i, j as u32);
        }
        self.sweep += 1;
        Ok(())
    }

    pub fn joint_log_prob(&self) -> f64 {
        joint_log_prob_counts(&self.counts, &self.hyper)
    }

    /// Posterior-mean readout: φ (T×V) and per-unit θ (U×T).
    pub fn estimate_model(&self) -> LdaModel {
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
        let theta_units = (0..c.units)
            .map(|u| {
                let denom = h.t as f64 * h.alpha + f64::from(c.n_u[u]);
                (0..h.t)
                    .map(|j| (h.alpha + f64::from(c.n_uz[u * c.t + j])) / denom)
                    .collect()
            })
            .collect();
        LdaModel { phi, theta_units }
    }
}

/// Two-level collapsed joint:
///
///   Σ_j [ln B({β + n_j^{(w)}}_w) − ln B(β·1_V)]
/// + Σ_u [ln B({α + n_u^{(j)}}_j) − ln B(α·1_T)].
pub fn joint_log_prob_counts(c: &LdaCounts, h: &LdaHyper) -> f64 {
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
    let base_t = c.t as f64 * math::ln_gamma(h.alpha) - math::ln_gamma(c.t as f64 * h.alpha);
    for u in 0..c.units {
        let mut row = -base_t;
        for j in 0..c.t {
            row += math::ln_gamma(h.alpha + f64::from(c.n_uz[u * c.t + j]));
        }
        row -= math::ln_gamma(c.t as f64 * h.alpha + f64::from(c.n_u[u]));
        lp += row;
    }
    lp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub phi: Vec<Vec<f64>>,
    pub theta_units: Vec<Vec<f64>>,
}

/// Uniform-random initialization over pre-built units. `v` is the vocabulary
/// size (needed because units carry only ids).
pub fn init_lda(units: &[Vec<u32>], v: usize, hyper: LdaHyper, mut rng: RngStream) -> Result<LdaState> {
    hyper.validate()?;
    if units.is_empty() || units.iter().any(|u| u.is_empty()) {
        return Err(Error::EmptyCorpus("units must be non-empty".into()));
    }
    if v == 0 {
        return Err(Error::Domain("vocabulary size must be ≥ 1".into()));
    }
    let mut tokens = Vec::new();
    let mut token_unit = Vec::new();
    for (u, unit) in units.iter().enumerate() {
        for &w in unit {
            if w as usize >= v {
                return Err(Error::VocabMismatch(format!(
                    "token id {w} out of range for vocabulary of {v}"
                )));
            }
            tokens.push(w);
            token_unit.push(u as u32);
        }
    }
    let z: Vec<u32> = (0..tokens.len())
        .map(|_| rng.uniform_index(hyper.t) as u32)
        .collect();
    let mut state = LdaState {
        hyper,
        v,
        rng,
        tokens,
        token_unit,
        z,
        counts: LdaCounts::zeroed(hyper.t, v, units.len()),
        sweep: 0,
    };
    state.counts = state.recount();
    Ok(state)
}

/// Trains a baseline on the corpus at the given granularity. Returns the
/// model and the per-sweep joint log-probability trace.
pub fn train_lda(
    corpus: &Arc<Corpus>,
    granularity: Granularity,
    hyper: LdaHyper,
    burn_in: u32,
    seed: u64,
) -> Result<(LdaModel, Vec<f64>)> {
    if burn_in < 1 {
        return Err(Error::Domain("burn_in must be ≥ 1".into()));
    }
    let units = as_units(corpus, granularity);
    let mut state = init_lda(&units, corpus.vocab_size(), hyper, RngStream::new(seed))?;
    let mut trace = Vec::with_capacity(burn_in as usize);
    for _ in 0..burn_in {
        state.gibbs_sweep()?;
        trace.push(state.joint_log_prob());
    }
    Ok((state.estimate_model(), trace))
}

/// [`train_lda`] without the trace; identical sample path for a given seed.
pub fn train_lda_quiet(
    corpus: &Arc<Corpus>,
    granularity: Granularity,
    hyper: LdaHyper,
    burn_in: u32,
    seed: u64,
) -> Result<LdaModel> {
    if burn_in < 1 {
        return Err(Error::Domain("burn_in must be ≥ 1".into()));
    }
    let units = as_units(corpus, granularity);
    let mut state = init_lda(&units, corpus.vocab_size(), hyper, RngStream::new(seed))?;
    for _ in 0..burn_in {
        state.gibbs_sweep()?;
    }
    Ok(state.estimate_model())
}

// ---------------------------------------------------------------------------
// Model file format
// ---------------------------------------------------------------------------

pub const LDA_FORMAT: &str = "lda-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModelFile {
    pub format: String,
    /// "document" or "sentence".
    pub granularity: String,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub burn_in: u32,
    pub rng: String,
    pub vocab: Vec<String>,
    pub phi: Vec<Vec<f64>>,
    pub theta_units: Vec<Vec<f64>>,
}

impl LdaModelFile {
    pub fn new(
        model: LdaModel,
        granularity: Granularity,
        hyper: &LdaHyper,
        seed: u64,
        burn_in: u32,
        vocab: Vec<String>,
    ) -> Self {
        Self {
            format: LDA_FORMAT.to_string(),
            granularity: granularity.field_name().to_string(),
            t: hyper.t,
            v: vocab.len(),
            alpha: hyper.alpha,
            beta: hyper.beta,
            seed,
            burn_in,
            rng: RNG_KIND.to_string(),
            vocab,
            phi: model.phi,
            theta_units: model.theta_units,
        }
    }

    pub fn hyper(&self) -> LdaHyper {
        LdaHyper { alpha: self.alpha, beta: self.beta, t: self.t }
    }

    pub fn granularity(&self) -> Result<Granularity> {
        Granularity::parse(&self.granularity)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.format != LDA_FORMAT {
            return Err(Error::Domain(format!(
                "expected format {LDA_FORMAT:?}, found {:?}",
                m.format
            )));
        }
        m.granularity()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, encode, RawDocument};

    fn corpus(docs: &[&[&[&str]]]) -> Arc<Corpus> {
        let raw: Vec<RawDocument> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| RawDocument {
                id: format!("d{i}"),
                sentences: d
                    .iter()
                    .map(|s| s.iter().map(|t| t.to_string()).collect())
                    .collect(),
            })
            .collect();
        let vocab = Arc::new(build_vocabulary(&raw, 1).unwrap());
        Arc::new(encode(&raw, vocab).unwrap())
    }

    #[test]
    fn units_respect_granularity() {
        let c = corpus(&[&[&["a", "b"], &["c"]], &[&["b"]]]);
        let docs = as_units(&c, Granularity::Document);
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].len(), 3);
        let sents = as_units(&c, Granularity::Sentence);
        assert_eq!(sents.len(), 3);
        assert_eq!(sents.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 1, 1]);
    }

    #[test]
    fn labels_and_field_names() {
        assert_eq!(Granularity::Document.label(), "lda.doc");
        assert_eq!(Granularity::Sentence.label(), "lda");
        assert_eq!(Granularity::parse("document").unwrap(), Granularity::Document);
        assert_eq!(Granularity::parse("sentence").unwrap(), Granularity::Sentence);
        assert!(Granularity::parse("token").is_err());
    }

    #[test]
    fn conditional_matches_hand_value() {
        // V=2, T=2, α=β=0.5, word a; excluding the site: topic 0 has 2 a's
        // and 1 b (n_t[0]=3), topic 1 one b; the unit's remaining assignments
        // are (2,1). Same exclusion counts as the three-level z-example, so
        // weight_0 = 2.5/4 × 2.5/4 = 0.390625, weight_1 = 0.5/2 × 1.5/4.
        let units = vec![vec![0, 0, 0, 1], vec![1]];
        let h = LdaHyper { alpha: 0.5, beta: 0.5, t: 2 };
        let mut st = init_lda(&units, 2, h, RngStream::new(1)).unwrap();
        st.set_assignments(&[0, 0, 0, 1, 0]).unwrap();
        st.decrement_token(0).unwrap();
        let w = st.conditional_z(0);
        assert!((w[0] - 0.390_625).abs() < 1e-12, "{w:?}");
        assert!((w[1] - 0.093_75).abs() < 1e-12, "{w:?}");
    }

    #[test]
    fn sweeps_keep_counts_consistent() {
        let c = corpus(&[&[&["a", "b", "a"], &["c", "b"]], &[&["c", "c", "a"]]]);
        for gran in [Granularity::Document, Granularity::Sentence] {
            let units = as_units(&c, gran);
            let h = LdaHyper { alpha: 0.5, beta: 0.1, t: 3 };
            let mut st = init_lda(&units, c.vocab_size(), h, RngStream::new(4)).unwrap();
            for _ in 0..15 {
                st.gibbs_sweep().unwrap();
                st.verify_counts().unwrap();
            }
        }
    }

    #[test]
    fn one_sentence_docs_make_granularities_identical() {
        // Every document has exactly one sentence, so units coincide and the
        // two granularities must walk the same seeded sample path.
        let c = corpus(&[&[&["a", "b", "b"]], &[&["c", "a"]], &[&["b", "c", "c"]]]);
        let h = LdaHyper { alpha: 0.3, beta: 0.2, t: 3 };
        let (m_doc, tr_doc) = train_lda(&c, Granularity::Document, h, 25, 9).unwrap();
        let (m_sent, tr_sent) = train_lda(&c, Granularity::Sentence, h, 25, 9).unwrap();
        assert_eq!(m_doc, m_sent);
        assert_eq!(tr_doc, tr_sent);
    }

    #[test]
    fn joint_log_prob_single_token() {
        // One token, T=1, V=2, α=β=0.5: ln(β/(Vβ)) + ln(α/(Tα)) = ln 0.5.
        let units = vec![vec![0u32]];
        let h = LdaHyper { alpha: 0.5, beta: 0.5, t: 1 };
        let st = init_lda(&units, 2, h, RngStream::new(0)).unwrap();
        assert!((st.joint_log_prob() - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn estimate_model_rows_are_distributions() {
        let c = corpus(&[&[&["a", "b"], &["c", "a"]]]);
        let h = LdaHyper { alpha: 0.4, beta: 0.2, t: 2 };
        let (m, trace) = train_lda(&c, Granularity::Sentence, h, 10, 3).unwrap();
        assert_eq!(trace.len(), 10);
        assert_eq!(m.phi.len(), 2);
        assert_eq!(m.theta_units.len(), 2);
        for row in m.phi.iter().chain(&m.theta_units) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn model_file_round_trips() {
        let c = corpus(&[&[&["a", "b"], &["b"]]]);
        let h = LdaHyper { alpha: 0.5, beta: 0.01, t: 2 };
        let (m, _) = train_lda(&c, Granularity::Document, h, 3, 8).unwrap();
        let file = LdaModelFile::new(m, Granularity::Document, &h, 8, 3, c.vocabulary().tokens().to_vec());
        let json = file.to_json().unwrap();
        assert!(json.starts_with("{\"format\":\"lda-model/1\",\"granularity\":\"document\""));
        let back = LdaModelFile::from_json(&json).unwrap();
        assert_eq!(file, back);
        assert!(LdaModelFile::from_json("{\"format\":\"slda-model/1\"}").is_err());
    }

    #[test]
    fn rejects_out_of_range_ids_and_empty_units() {
        let h = LdaHyper { alpha: 0.5, beta: 0.5, t: 2 };
        assert!(init_lda(&[vec![3]], 2, h, RngStream::new(0)).is_err());
        assert!(init_lda(&[vec![]], 2, h, RngStream::new(0)).is_err());
        assert!(init_lda(&[], 2, h, RngStream::new(0)).is_err());
    }
}
