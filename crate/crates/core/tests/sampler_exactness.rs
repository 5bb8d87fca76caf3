//! Long-chain distributional checks: on instances small enough to enumerate,
//! the empirical distribution over full (z, x) configurations visited by the
//! Gibbs chain must match the exact posterior in total variation. Single-site
//! marginals are uniform by label symmetry no matter what the sampler does,
//! so only this joint comparison has discriminating power.

mod common;

use std::sync::Arc;

use common::{corpus_from_ids, total_variation};
use slda_core::corpus::Corpus;
use slda_core::eval::brute_force_posterior;
use slda_core::lda::{init_lda, joint_log_prob_counts, LdaHyper, LdaState};
use slda_core::rng::RngStream;
use slda_core::slda::{init_state, Hyperparams};

const BURN_IN: usize = 1_000;
const SWEEPS: usize = 50_000;
const TV_BOUND: f64 = 0.02;

/// Runs the sentence-layer sampler on `corpus`, histograms the visited
/// configurations, and returns the TV distance to the enumerated posterior.
fn slda_chain_tv(corpus: &Arc<Corpus>, hyper: Hyperparams, seed: u64) -> f64 {
    let posterior = brute_force_posterior(corpus, &hyper).unwrap();
    let mut state = init_state(Arc::clone(corpus), hyper, RngStream::new(seed)).unwrap();
    for _ in 0..BURN_IN {
        state.gibbs_sweep().unwrap();
    }
    let mut visits = vec![0u64; posterior.n_configs()];
    for _ in 0..SWEEPS {
        state.gibbs_sweep().unwrap();
        visits[posterior.config_index(state.z(), state.x())] += 1;
    }
    state.verify_counts().unwrap();
    let empirical: Vec<f64> = visits.iter().map(|&c| c as f64 / SWEEPS as f64).collect();
    total_variation(&empirical, &posterior.probabilities)
}

#[test]
fn slda_chain_matches_enumeration() {
    // one document, sentences (w0 w1) and (w1 w1): 2^4 · 2^2 = 64 configurations
    let corpus = corpus_from_ids(2, &[vec![vec![0, 1], vec![1, 1]]]);
    let hyper = Hyperparams { alpha: 0.5, beta: 0.5, gamma: 0.5, s: 2, t: 2 };
    let tv = slda_chain_tv(&corpus, hyper, 2024);
    println!("sentence-layer chain vs enumeration: TV = {tv:.4} over {SWEEPS} sweeps");
    assert!(tv <= TV_BOUND, "TV {tv:.4} exceeds {TV_BOUND}");
}

#[test]
fn slda_chain_matches_enumeration_two_sentence_doc() {
    // one document, sentences (w0 w1) and (w2): 2^3 · 2^2 = 32 configurations
    let corpus = corpus_from_ids(3, &[vec![vec![0, 1], vec![2]]]);
    let hyper = Hyperparams { alpha: 0.5, beta: 0.5, gamma: 0.5, s: 2, t: 2 };
    let tv = slda_chain_tv(&corpus, hyper, 7);
    println!("three-token chain vs enumeration: TV = {tv:.4} over {SWEEPS} sweeps");
    assert!(tv <= TV_BOUND, "TV {tv:.4} exceeds {TV_BOUND}");
}

/// Enumerates the flat-LDA posterior over all T^N word-topic configurations
/// by normalizing the collapsed joint. Independent of the incremental
/// sampler path: counts are tabulated from scratch per configuration.
fn enumerate_lda_posterior(state: &mut LdaState, t: usize, n: usize) -> Vec<f64> {
    let n_configs = t.pow(n as u32);
    let mut logs = Vec::with_capacity(n_configs);
    let mut z = vec![0u32; n];
    for config in 0..n_configs {
        let mut rest = config;
        for zi in z.iter_mut() {
            *zi = (rest % t) as u32;
            rest /= t;
        }
        state.set_assignments(&z).unwrap();
        logs.push(joint_log_prob_counts(state.counts(), state.hyper()));
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

#[test]
fn lda_chain_matches_enumeration() {
    // two units (w0 w1) and (w1 w1): 2^4 = 16 configurations
    let units: Vec<Vec<u32>> = vec![vec![0, 1], vec![1, 1]];
    let n = 4;
    let hyper = LdaHyper { alpha: 0.5, beta: 0.5, t: 2 };

    let mut scratch = init_lda(&units, 2, hyper, RngStream::new(1)).unwrap();
    let exact = enumerate_lda_posterior(&mut scratch, 2, n);
    let total: f64 = exact.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    // anchors derived by exact rational arithmetic (half-integer gamma ratios)
    let max = exact.iter().cloned().fold(0.0, f64::max);
    assert!((max - 10.0 / 69.0).abs() < 1e-12, "max prob {max}");
    assert!((exact[0] - 5.0 / 46.0).abs() < 1e-12, "all-zero prob {}", exact[0]);

    let mut state = init_lda(&units, 2, hyper, RngStream::new(99)).unwrap();
    for _ in 0..BURN_IN {
        state.gibbs_sweep().unwrap();
    }
    let mut visits = vec![0u64; exact.len()];
    for _ in 0..SWEEPS {
        state.gibbs_sweep().unwrap();
        let config = state
            .z()
            .iter()
            .rev()
            .fold(0usize, |acc, &zi| acc * 2 + zi as usize);
        visits[config] += 1;
    }
    state.verify_counts().unwrap();
    let empirical: Vec<f64> = visits.iter().map(|&c| c as f64 / SWEEPS as f64).collect();
    let tv = total_variation(&empirical, &exact);
    println!("flat-LDA chain vs enumeration: TV = {tv:.4} over {SWEEPS} sweeps");
    assert!(tv <= TV_BOUND, "TV {tv:.4} exceeds {TV_BOUND}");
}
