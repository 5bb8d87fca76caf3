//! Randomized property checks over the numeric and corpus plumbing, driving
//! the identities the samplers rely on across input space rather than at
//! hand-picked points.

mod common;

use std::sync::Arc;

use proptest::prelude::*;
use slda_core::corpus::split;
use slda_core::eval::perplexity;
use slda_core::math::{
    fit_linear_no_intercept, log_multibeta, log_multibeta_ratio, normalize_log_weights,
    LogWeights,
};
use slda_core::rng::RngStream;

proptest! {
    /// Normalization of log weights is invariant to a common additive shift
    /// (that is the whole point of working in log space).
    #[test]
    fn log_normalization_shift_invariant(
        logs in prop::collection::vec(-50.0f64..50.0, 1..8),
        shift in -200.0f64..200.0,
    ) {
        let base = normalize_log_weights(&LogWeights::new(logs.clone()).unwrap()).unwrap();
        let shifted: Vec<f64> = logs.iter().map(|l| l + shift).collect();
        let moved = normalize_log_weights(&LogWeights::new(shifted).unwrap()).unwrap();
        let sum: f64 = base.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    /// The incremental beta-ratio equals the difference of two full
    /// multivariate-beta evaluations.
    #[test]
    fn multibeta_ratio_matches_difference(
        components in prop::collection::vec((0.05f64..8.0, 0u32..6), 1..6),
    ) {
        let base: Vec<f64> = components.iter().map(|&(b, _)| b).collect();
        let increments: Vec<u32> = components.iter().map(|&(_, m)| m).collect();
        let bumped: Vec<f64> =
            base.iter().zip(&increments).map(|(b, &m)| b + f64::from(m)).collect();
        let direct = log_multibeta(&bumped).unwrap() - log_multibeta(&base).unwrap();
        let ratio = log_multibeta_ratio(&base, &increments).unwrap();
        prop_assert!(
            (ratio - direct).abs() <= 1e-9 * direct.abs().max(1.0),
            "ratio {ratio} vs direct {direct}"
        );
    }

    /// Fitting noiseless data generated from known coefficients recovers them.
    #[test]
    fn exact_data_fits_exactly(
        c0 in -5.0f64..5.0,
        c1 in -5.0f64..5.0,
        rows in prop::collection::vec((0.5f64..4.0, 4.0f64..9.0), 4..12),
    ) {
        let x: Vec<Vec<f64>> = rows.iter().map(|&(a, b)| vec![a, b]).collect();
        let y: Vec<f64> = rows.iter().map(|&(a, b)| c0 * a + c1 * b).collect();
        match fit_linear_no_intercept(&x, &y) {
            Ok(fit) => {
                prop_assert!((fit.coefficients[0] - c0).abs() < 1e-6 * (1.0 + c0.abs()));
                prop_assert!((fit.coefficients[1] - c1).abs() < 1e-6 * (1.0 + c1.abs()));
                prop_assert!((fit.adjusted_r_squared - 1.0).abs() < 1e-6);
            }
            // random designs may be numerically collinear; that is the
            // fitter's documented escape hatch, not a property failure
            Err(slda_core::Error::SingularFit(_)) => {}
            Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
        }
    }

    /// Perplexity is a symmetric function of the per-token log probabilities.
    #[test]
    fn perplexity_permutation_invariant(
        mut logs in prop::collection::vec(-9.0f64..-0.01, 1..12),
        rotation in 0usize..12,
    ) {
        let forward = perplexity(&logs, logs.len()).unwrap();
        let k = rotation % logs.len();
        logs.rotate_left(k);
        let rotated = perplexity(&logs, logs.len()).unwrap();
        logs.reverse();
        let reversed = perplexity(&logs, logs.len()).unwrap();
        prop_assert!((forward - rotated).abs() <= 1e-12 * forward);
        prop_assert!((forward - reversed).abs() <= 1e-12 * forward);
        prop_assert!(forward >= 1.0);
    }

    /// Splitting preserves every document exactly once, sizes the test side
    /// as ⌈fraction·L⌉, keeps relative order, and shares the vocabulary.
    #[test]
    fn split_partitions_documents(
        n_docs in 2usize..10,
        // below 0.5 the ceiling can never swallow the whole corpus, so every
        // generated case is a legal split
        fraction in 0.05f64..0.5,
        seed in 0u64..1000,
    ) {
        let mut rng = RngStream::new(seed);
        let corpus = common::random_corpus(&mut rng, n_docs, 3, 4, 6);
        let (train, test) = split(&corpus, fraction, &mut rng).unwrap();
        let expected_test = (fraction * n_docs as f64).ceil() as usize;
        prop_assert_eq!(test.n_documents(), expected_test);
        prop_assert_eq!(train.n_documents() + test.n_documents(), n_docs);

        let originals: Vec<&str> =
            corpus.documents().iter().map(|d| d.id.as_str()).collect();
        let mut seen: Vec<usize> = Vec::new();
        for side in [&train, &test] {
            let positions: Vec<usize> = side
                .documents()
                .iter()
                .map(|doc| originals.iter().position(|&id| id == doc.id).unwrap())
                .collect();
            // original order preserved within each side
            prop_assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
            seen.extend(positions);
        }
        // together the two sides are exactly the original documents
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n_docs).collect::<Vec<_>>());
        prop_assert!(Arc::ptr_eq(train.vocabulary(), corpus.vocabulary()));
        prop_assert!(Arc::ptr_eq(test.vocabulary(), corpus.vocabulary()));
    }
}
