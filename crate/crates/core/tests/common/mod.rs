//! Shared fixtures for the integration suites: corpora built from explicit
//! token ids (so enumeration oracles and sampler states index the same
//! vocabulary), random corpus generation, and the total-variation metric.

// Each integration target compiles this module but uses its own subset.
#![allow(dead_code)]

use std::sync::Arc;

use slda_core::corpus::{corpus_from_encoded, Corpus, Document, Vocabulary};
use slda_core::rng::RngStream;

/// Builds a corpus over the vocabulary `w0..w{v-1}` from explicit token ids.
/// Unlike the text pipeline, ids here are positional, not frequency-ranked,
/// which keeps hand corpora aligned with enumeration oracles.
pub fn corpus_from_ids(v: usize, docs: &[Vec<Vec<u32>>]) -> Arc<Corpus> {
    let mut freq = vec![0u64; v];
    for doc in docs {
        for sentence in doc {
            for &w in sentence {
                freq[w as usize] += 1;
            }
        }
    }
    let tokens = (0..v).map(|w| format!("w{w}")).collect();
    let vocab = Arc::new(Vocabulary::from_tokens(tokens, freq).unwrap());
    let documents = docs
        .iter()
        .enumerate()
        .map(|(i, d)| Document { id: format!("d{i}"), sentences: d.clone() })
        .collect();
    Arc::new(corpus_from_encoded(documents, vocab).unwrap())
}

/// Random corpus with `n_docs` documents of 1..=`max_sentences` sentences of
/// 1..=`max_words` tokens over `v` words.
pub fn random_corpus(
    rng: &mut RngStream,
    n_docs: usize,
    max_sentences: usize,
    max_words: usize,
    v: usize,
) -> Arc<Corpus> {
    let docs: Vec<Vec<Vec<u32>>> = (0..n_docs)
        .map(|_| {
            let n_sent = 1 + rng.uniform_index(max_sentences);
            (0..n_sent)
                .map(|_| {
                    let n_words = 1 + rng.uniform_index(max_words);
                    (0..n_words).map(|_| rng.uniform_index(v) as u32).collect()
                })
                .collect()
        })
        .collect();
    corpus_from_ids(v, &docs)
}

/// Total variation distance between two distributions on the same index set.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Largest relative discrepancy between paired entries, for tolerance checks
/// on probability vectors that stay well away from zero denominators.
pub fn max_relative_error(actual: &[f64], expected: &[f64]) -> f64 {
    assert_eq!(actual.len(), expected.len());
    actual
        .iter()
        .zip(expected)
        .map(|(a, e)| (a - e).abs() / e.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}
