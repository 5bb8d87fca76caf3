//! Exactness checks that tie the per-site Gibbs conditionals to the collapsed
//! joint probability and to the enumeration oracle. These are the strongest
//! correctness guarantees in the suite: a sampler whose conditionals are the
//! normalized joint ratios at every site targets the right distribution by
//! construction.

mod common;

use std::sync::Arc;

use common::{corpus_from_ids, max_relative_error, random_corpus};
use slda_core::eval::brute_force_posterior;
use slda_core::lda::{as_units, init_lda, Granularity, LdaHyper, LdaState};
use slda_core::math::normalize_log_weights;
use slda_core::rng::RngStream;
use slda_core::slda::{init_state, Hyperparams, SamplerState};

const REL_TOL: f64 = 1e-10;

fn normalize(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

fn softmax(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    normalize(&exps)
}

/// Random prior scale in [0.05, 2.05), so the identity is exercised away from
/// the symmetric-0.5 corner used by the hand examples.
fn random_prior(rng: &mut RngStream) -> f64 {
    0.05 + 2.0 * rng.next_f64()
}

fn random_slda_state(seed: u64) -> SamplerState {
    let mut rng = RngStream::new(seed);
    let corpus = random_corpus(&mut rng, 3, 3, 5, 5);
    let hyper = Hyperparams {
        alpha: random_prior(&mut rng),
        beta: random_prior(&mut rng),
        gamma: random_prior(&mut rng),
        s: 1 + rng.uniform_index(3),
        t: 2 + rng.uniform_index(3),
    };
    let mut state = init_state(corpus, hyper, rng.substream(1)).unwrap();
    // a few sweeps so the tested states are not fresh initializations
    for _ in 0..2 {
        state.gibbs_sweep().unwrap();
    }
    state
}

/// For every token: the T-vector of conditional weights, renormalized, must
/// equal the normalized exponentials of the T joint log probabilities of the
/// single-site variants.
fn check_slda_z_sites(state: &mut SamplerState) -> usize {
    let mut checked = 0;
    for i in 0..state.n_tokens() {
        let original = state.z()[i];
        state.decrement_token(i).unwrap();
        let conditional = normalize(&state.conditional_z(i));
        let mut joints = Vec::with_capacity(state.hyper().t);
        for j in 0..state.hyper().t as u32 {
            state.increment_token(i, j);
            joints.push(state.joint_log_prob());
            state.decrement_token(i).unwrap();
        }
        state.increment_token(i, original);
        let err = max_relative_error(&conditional, &softmax(&joints));
        assert!(err <= REL_TOL, "token {i}: relative error {err:.3e}");
        checked += 1;
    }
    checked
}

/// Same identity for sentence topics, which exercises the log-space
/// multivariate-beta ratio path.
fn check_slda_x_sites(state: &mut SamplerState) -> usize {
    let mut checked = 0;
    for s in 0..state.n_sentences() {
        let original = state.x()[s];
        state.decrement_sentence(s).unwrap();
        let conditional = normalize_log_weights(&state.conditional_x(s).unwrap()).unwrap();
        let mut joints = Vec::with_capacity(state.hyper().s);
        for l in 0..state.hyper().s as u32 {
            state.increment_sentence(s, l);
            joints.push(state.joint_log_prob());
            state.decrement_sentence(s).unwrap();
        }
        state.increment_sentence(s, original);
        let err = max_relative_error(&conditional, &softmax(&joints));
        assert!(err <= REL_TOL, "sentence {s}: relative error {err:.3e}");
        checked += 1;
    }
    checked
}

#[test]
fn slda_conditionals_equal_joint_ratios() {
    let mut z_sites = 0;
    let mut x_sites = 0;
    for seed in 0..30 {
        let mut state = random_slda_state(100 + seed);
        z_sites += check_slda_z_sites(&mut state);
        x_sites += check_slda_x_sites(&mut state);
        state.verify_counts().unwrap();
    }
    assert!(z_sites >= 500, "only {z_sites} token sites exercised");
    assert!(x_sites >= 100, "only {x_sites} sentence sites exercised");
}

fn random_lda_state(seed: u64) -> LdaState {
    let mut rng = RngStream::new(seed);
    let corpus = random_corpus(&mut rng, 3, 3, 5, 5);
    let granularity =
        if rng.uniform_index(2) == 0 { Granularity::Sentence } else { Granularity::Document };
    let units = as_units(&corpus, granularity);
    let hyper = LdaHyper {
        alpha: random_prior(&mut rng),
        beta: random_prior(&mut rng),
        t: 2 + rng.uniform_index(3),
    };
    let mut state = init_lda(&units, corpus.vocab_size(), hyper, rng.substream(1)).unwrap();
    for _ in 0..2 {
        state.gibbs_sweep().unwrap();
    }
    state
}

#[test]
fn lda_conditionals_equal_joint_ratios() {
    let mut sites = 0;
    for seed in 0..30 {
        let mut state = random_lda_state(500 + seed);
        for i in 0..state.n_tokens() {
            let original = state.z()[i];
            state.decrement_token(i).unwrap();
            let conditional = normalize(&state.conditional_z(i));
            let mut joints = Vec::with_capacity(state.hyper().t);
            for j in 0..state.hyper().t as u32 {
                state.increment_token(i, j);
                joints.push(state.joint_log_prob());
                state.decrement_token(i).unwrap();
            }
            state.increment_token(i, original);
            let err = max_relative_error(&conditional, &softmax(&joints));
            assert!(err <= REL_TOL, "seed {seed} token {i}: relative error {err:.3e}");
            sites += 1;
        }
        state.verify_counts().unwrap();
    }
    assert!(sites >= 500, "only {sites} token sites exercised");
}

#[test]
fn slda_counts_conserved_across_sweeps() {
    let mut rng = RngStream::new(9);
    let corpus = random_corpus(&mut rng, 12, 4, 9, 30);
    let hyper = Hyperparams { alpha: 0.4, beta: 0.2, gamma: 0.3, s: 3, t: 4 };
    let mut state = init_state(corpus, hyper, rng.substream(7)).unwrap();
    for sweep in 0..30 {
        state.gibbs_sweep().unwrap();
        state.verify_counts().unwrap_or_else(|e| panic!("sweep {sweep}: {e}"));
    }
    assert_eq!(state.sweep_count(), 30);
}

#[test]
fn lda_counts_conserved_across_sweeps() {
    let mut rng = RngStream::new(11);
    let corpus = random_corpus(&mut rng, 12, 4, 9, 30);
    for granularity in [Granularity::Sentence, Granularity::Document] {
        let units = as_units(&corpus, granularity);
        let hyper = LdaHyper { alpha: 0.7, beta: 0.05, t: 4 };
        let mut state =
            init_lda(&units, corpus.vocab_size(), hyper, RngStream::new(21)).unwrap();
        for sweep in 0..30 {
            state.gibbs_sweep().unwrap();
            state.verify_counts().unwrap_or_else(|e| panic!("sweep {sweep}: {e}"));
        }
    }
}

/// With a single sentence topic the x layer is pinned: every sentence keeps
/// topic 0 through any number of sweeps and the conditional is a point mass.
#[test]
fn single_sentence_topic_pins_x() {
    let mut rng = RngStream::new(13);
    let corpus = random_corpus(&mut rng, 5, 3, 6, 10);
    let hyper = Hyperparams { alpha: 0.5, beta: 0.1, gamma: 0.2, s: 1, t: 3 };
    let mut state = init_state(corpus, hyper, rng.substream(3)).unwrap();
    assert!(state.x().iter().all(|&l| l == 0));
    for _ in 0..5 {
        state.gibbs_sweep().unwrap();
    }
    assert!(state.x().iter().all(|&l| l == 0));
    state.verify_counts().unwrap();
    state.decrement_sentence(0).unwrap();
    let w = normalize_log_weights(&state.conditional_x(0).unwrap()).unwrap();
    assert_eq!(w.len(), 1);
    assert!((w[0] - 1.0).abs() < 1e-15);
    state.increment_sentence(0, 0);
    state.verify_counts().unwrap();
}

/// On an enumerable instance the sampler's per-site conditionals must agree
/// with exact conditionals read off the brute-force posterior by restriction:
/// Pr(z_i = j | rest) ∝ Pr(full configuration with z_i = j).
#[test]
fn conditionals_match_enumeration_restrictions() {
    let corpus = corpus_from_ids(3, &[vec![vec![0, 1], vec![2]], vec![vec![1, 2]]]);
    let hyper = Hyperparams { alpha: 0.7, beta: 0.4, gamma: 0.9, s: 2, t: 2 };
    let posterior = brute_force_posterior(&corpus, &hyper).unwrap();

    let mut state = init_state(Arc::clone(&corpus), hyper, RngStream::new(17)).unwrap();
    let n = state.n_tokens();
    let m = state.n_sentences();
    for config in 0..posterior.n_configs() {
        let (z, x) = posterior.decode(config);
        state.set_assignments(&z, &x).unwrap();

        for i in 0..n {
            state.decrement_token(i).unwrap();
            let conditional = normalize(&state.conditional_z(i));
            state.increment_token(i, z[i]);
            let mut variant = z.clone();
            let exact = normalize(
                &(0..hyper.t as u32)
                    .map(|j| {
                        variant[i] = j;
                        posterior.probabilities[posterior.config_index(&variant, &x)]
                    })
                    .collect::<Vec<_>>(),
            );
            let err = max_relative_error(&conditional, &exact);
            assert!(err <= REL_TOL, "config {config} token {i}: error {err:.3e}");
        }

        for s in 0..m {
            state.decrement_sentence(s).unwrap();
            let conditional = normalize_log_weights(&state.conditional_x(s).unwrap()).unwrap();
            state.increment_sentence(s, x[s]);
            let mut variant = x.clone();
            let exact = normalize(
                &(0..hyper.s as u32)
                    .map(|l| {
                        variant[s] = l;
                        posterior.probabilities[posterior.config_index(&z, &variant)]
                    })
                    .collect::<Vec<_>>(),
            );
            let err = max_relative_error(&conditional, &exact);
            assert!(err <= REL_TOL, "config {config} sentence {s}: error {err:.3e}");
        }
    }
}

/// Under exchangeable symmetric priors relabeling topics leaves the joint
/// unchanged, so every exact single-site marginal is uniform. This pins the
/// enumerator's marginal tables analytically — and is the reason marginal
/// tables alone cannot certify a sampler.
#[test]
fn enumeration_marginals_are_uniform_by_symmetry() {
    let corpus = corpus_from_ids(3, &[vec![vec![0, 0], vec![0, 1]], vec![vec![1, 2], vec![2, 2]]]);
    let hyper = Hyperparams { alpha: 0.5, beta: 0.5, gamma: 0.5, s: 2, t: 2 };
    let posterior = brute_force_posterior(&corpus, &hyper).unwrap();
    let total: f64 = posterior.probabilities.iter().sum();
    assert!((total - 1.0).abs() < 1e-9);
    for row in &posterior.z_marginals {
        for &p in row {
            assert!((p - 0.5).abs() < 1e-9, "z marginal {p} ≠ 1/2");
        }
    }
    for row in &posterior.x_marginals {
        for &p in row {
            assert!((p - 0.5).abs() < 1e-9, "x marginal {p} ≠ 1/2");
        }
    }
}
