//! Hyperparameter selection: the built-in prior regression, grid search over
//! (S, T, α, β, γ), and refitting the regression from grid results.
//!
//! The built-in regression maps topic counts to grid-optimal priors:
//!
//!   α(S)    = 0.6433 / S
//!   β(S, T) = 1.46·10⁻⁴ · S + 1.4528713 / T
//!   γ(S, T) = 5.276·10⁻⁵ · S + 0.2156 / T
//!
//! Flat-LDA baselines use the conventional α = 50 / T, β = 0.01.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::eval::{evaluate_slda, HeldoutConfig};
use crate::math::{fit_linear_no_intercept, LinearFit};
use crate::par;
use crate::rng::derive_seed;
use crate::slda::{train_quiet, Hyperparams};
use std::sync::Arc;

pub const ALPHA_COEF_INV_S: f64 = 0.6433;
pub const BETA_COEF_S: f64 = 1.46e-4;
pub const BETA_COEF_INV_T: f64 = 1.452_871_3;
pub const GAMMA_COEF_S: f64 = 5.276e-5;
pub const GAMMA_COEF_INV_T: f64 = 0.2156;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorTriple {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Priors from the built-in regression at the given topic counts.
pub fn regress_priors(s: usize, t: usize) -> Result<PriorTriple> {
    if s < 1 || t < 1 {
        return Err(Error::Domain(format!("topic counts must be ≥ 1, got S = {s}, T = {t}")));
    }
    let (s, t) = (s as f64, t as f64);
    Ok(PriorTriple {
        alpha: ALPHA_COEF_INV_S / s,
        beta: BETA_COEF_S * s + BETA_COEF_INV_T / t,
        gamma: GAMMA_COEF_S * s + GAMMA_COEF_INV_T / t,
    })
}

/// Conventional flat-LDA priors (α, β) = (50/T, 0.01).
pub fn default_lda_priors(t: usize) -> Result<(f64, f64)> {
    if t < 1 {
        return Err(Error::Domain(format!("topic count must be ≥ 1, got T = {t}")));
    }
    Ok((50.0 / t as f64, 0.01))
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Values tried for S and for T (the full cross product is searched).
    pub topic_counts: Vec<usize>,
    /// Values tried for each of α, β, γ.
    pub prior_values: Vec<f64>,
    /// Training sweeps per cell.
    pub train_burn_in: u32,
    /// Test-side sweeps per cell when scoring on the dev split.
    pub eval_burn_in: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            topic_counts: vec![5, 10, 50, 100],
            prior_values: vec![0.05, 0.01, 0.005, 0.001],
            train_burn_in: 200,
            eval_burn_in: 100,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.topic_counts.is_empty() || self.prior_values.is_empty() {
            return Err(Error::Domain("grid axes must be non-empty".into()));
        }
        if self.topic_counts.iter().any(|&k| k < 1) {
            return Err(Error::Domain("topic counts must be ≥ 1".into()));
        }
        if self.prior_values.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::Domain("prior values must be positive reals".into()));
        }
        if self.train_burn_in < 1 || self.eval_burn_in < 1 {
            return Err(Error::Domain("burn-in counts must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Cells in deterministic (S, T, α, β, γ) order, axes in listed order.
    fn cells(&self) -> Vec<(usize, usize, PriorTriple)> {
        let mut out = Vec::new();
        for &s in &self.topic_counts {
            for &t in &self.topic_counts {
                for &alpha in &self.prior_values {
                    for &beta in &self.prior_values {
                        for &gamma in &self.prior_values {
                            out.push((s, t, PriorTriple { alpha, beta, gamma }));
                        }
                    }
                }
            }
        }
        out
    }
}

/// One evaluated grid cell. Field names double as the CSV header:
/// `S,T,alpha,beta,gamma,dev_perplexity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub dev_perplexity: f64,
}

impl GridRecord {
    pub fn triple(&self) -> PriorTriple {
        PriorTriple { alpha: self.alpha, beta: self.beta, gamma: self.gamma }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    /// Every cell, in the deterministic grid order.
    pub records: Vec<GridRecord>,
    /// Per (S, T): the cell with minimal dev perplexity, ties broken by the
    /// lexicographically smallest (α, β, γ).
    pub best: Vec<GridRecord>,
}

/// Trains and scores every cell. Each cell's training seed is derived from
/// the master seed and the cell's coordinates (bit patterns for the priors),
/// so results do not depend on evaluation order or thread count; the eval
/// seed is a substream of the cell seed.
pub fn run_grid(
    train: &Arc<Corpus>,
    dev: &Arc<Corpus>,
    spec: &GridSpec,
    seed: u64,
) -> Result<GridOutcome> {
    spec.validate()?;
    if !std::sync::Arc::ptr_eq(train.vocabulary(), dev.vocabulary())
        && train.vocabulary().as_ref() != dev.vocabulary().as_ref()
    {
        return Err(Error::VocabMismatch(
            "train and dev corpora must share a vocabulary".into(),
        ));
    }
    let cells = spec.cells();
    let eval_cfg = HeldoutConfig { test_burn_in: spec.eval_burn_in, trace_every: 10 };
    let results: Vec<Result<GridRecord>> = par::map_slice(&cells, |&(s, t, triple)| {
        let hyper = Hyperparams {
            alpha: triple.alpha,
            beta: triple.beta,
            gamma: triple.gamma,
            s,
            t,
        };
        let cell_seed = derive_seed(&[
            seed,
            s as u64,
            t as u64,
            triple.alpha.to_bits(),
            triple.beta.to_bits(),
            triple.gamma.to_bits(),
        ]);
        let model = train_quiet(train, hyper, spec.train_burn_in, cell_seed)?;
        let eval_seed = derive_seed(&[cell_seed, 1]);
        let (ppl, _) = evaluate_slda(&model.phi, &hyper, dev, &eval_cfg, eval_seed)?;
        Ok(GridRecord {
            s,
            t,
            alpha: triple.alpha,
            beta: triple.beta,
            gamma: triple.gamma,
            dev_perplexity: ppl,
        })
    });
    let records: Vec<GridRecord> = results.into_iter().collect::<Result<_>>()?;
    let best = select_best(&records);
    Ok(GridOutcome { records, best })
}

/// Per-(S, T) argmin over dev perplexity; ties go to the smallest (α, β, γ).
/// Output follows the first-appearance order of (S, T) pairs.
pub fn select_best(records: &[GridRecord]) -> Vec<GridRecord> {
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut best: Vec<GridRecord> = Vec::new();
    for r in records {
        let key = (r.s, r.t);
        match order.iter().position(|&k| k == key) {
            None => {
                order.push(key);
                best.push(*r);
            }
            Some(i) => {
                let b = &mut best[i];
                let cand = (r.dev_perplexity, r.alpha, r.beta, r.gamma);
                let cur = (b.dev_perplexity, b.alpha, b.beta, b.gamma);
                if cand < cur {
                    *b = *r;
                }
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Grid CSV
// ---------------------------------------------------------------------------

pub fn write_grid_csv<W: Write>(out: W, records: &[GridRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_csv<R: Read>(input: R) -> Result<Vec<GridRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row.map_err(|e| Error::Csv(e.to_string()))?);
    }
    if records.is_empty() {
        return Err(Error::Csv("grid file has no data rows".into()));
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Refitting the regression from grid results
// ---------------------------------------------------------------------------

/// Least-squares refits of the prior regression from per-(S, T) best cells:
/// α on 1/S; β and γ on (S, 1/T). No intercepts.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorRegression {
    pub alpha: LinearFit,
    pub beta: LinearFit,
    pub gamma: LinearFit,
}

/// Fits the three prior equations to grid records (typically the per-(S, T)
/// winners). The α fit needs
/// at least two distinct S values; the β and γ fits additionally need two
/// distinct T values — with fewer the design matrix is rank-deficient and a
/// singular-fit error is returned.
pub fn fit_prior_regression(records: &[GridRecord]) -> Result<PriorRegression> {
    if records.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 records to fit the α regression, got {}",
            records.len()
        )));
    }
    let mut s_values: Vec<usize> = records.iter().map(|r| r.s).collect();
    s_values.sort_unstable();
    s_values.dedup();
    if s_values.len() < 2 {
        return Err(Error::SingularFit(
            "α regression on 1/S needs at least two distinct S values".into(),
        ));
    }
    let x_alpha: Vec<Vec<f64>> = records.iter().map(|r| vec![1.0 / r.s as f64]).collect();
    let y_alpha: Vec<f64> = records.iter().map(|r| r.alpha).collect();
    let alpha = fit_linear_no_intercept(&x_alpha, &y_alpha)?;

    if records.len() < 3 {
        return Err(Error::Domain(format!(
            "need at least 3 records to fit the β and γ regressions, got {}",
            records.len()
        )));
    }
    let mut t_values: Vec<usize> = records.iter().map(|r| r.t).collect();
    t_values.sort_unstable();
    t_values.dedup();
    if t_values.len() < 2 {
        return Err(Error::SingularFit(
            "β and γ regressions on (S, 1/T) need at least two distinct T values".into(),
        ));
    }
    let x_bg: Vec<Vec<f64>> = records
        .iter()
        .map(|r| vec![r.s as f64, 1.0 / r.t as f64])
        .collect();
    let y_beta: Vec<f64> = records.iter().map(|r| r.beta).collect();
    let y_gamma: Vec<f64> = records.iter().map(|r| r.gamma).collect();
    let beta = fit_linear_no_intercept(&x_bg, &y_beta)?;
    let gamma = fit_linear_no_intercept(&x_bg, &y_gamma)?;

    Ok(PriorRegression { alpha, beta, gamma })
}
