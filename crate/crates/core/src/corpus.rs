//! Corpus ingestion: sentence segmentation, tokenization, vocabulary
//! construction with min-count pruning, integer encoding, and train/test
//! splitting. A [`Corpus`] is immutable after construction and shares its
//! [`Vocabulary`] across splits.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A pre-encoding document: an id plus sentences of token strings. This is
/// also the JSONL exchange schema (one document per line).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub sentences: Vec<Vec<String>>,
}

/// Dense token ↔ id mapping with per-token corpus frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    tokens: Vec<String>,
    frequencies: Vec<u64>,
}

impl Vocabulary {
    /// Builds from explicit token/frequency lists (ids = positions). Used by
    /// the synthetic generator and by model files that embed their vocabulary.
    pub fn from_tokens(tokens: Vec<String>, frequencies: Vec<u64>) -> Result<Self> {
        if tokens.is_empty() || tokens.len() != frequencies.len() {
            return Err(Error::Domain(format!(
                "vocabulary needs matching non-empty token/frequency lists, got {} and {}",
                tokens.len(),
                frequencies.len()
            )));
        }
        let mut token_to_id = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if token_to_id.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Domain(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Self { token_to_id, tokens, frequencies })
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn frequency(&self, id: u32) -> u64 {
        self.frequencies[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Writes a header line, then one `token<TAB>id<TAB>frequency` line per
    /// token, id-ascending.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "token\tid\tfrequency")?;
        for (i, t) in self.tokens.iter().enumerate() {
            writeln!(w, "{t}\t{i}\t{}", self.frequencies[i])?;
        }
        Ok(())
    }
}

/// An encoded sentence: token ids, all < V, non-empty.
pub type Sentence = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

/// Immutable encoded corpus with cached size totals.
#[derive(Debug, Clone)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Arc<Vocabulary>,
    n_tokens: usize,
    n_sentences: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    /// Document count (L).
    pub documents: usize,
    /// Sentence count (M).
    pub sentences: usize,
    /// Token count (N).
    pub tokens: usize,
    /// Vocabulary size (V).
    pub vocab_size: usize,
    pub mean_sentences_per_document: f64,
}

impl Corpus {
    fn from_documents(documents: Vec<Document>, vocabulary: Arc<Vocabulary>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus("no documents".into()));
        }
        let mut n_tokens = 0;
        let mut n_sentences = 0;
        for doc in &documents {
            if doc.sentences.is_empty() {
                return Err(Error::EmptyCorpus(format!("document {:?} has no sentences", doc.id)));
            }
            for s in &doc.sentences {
                if s.is_empty() {
                    return Err(Error::EmptyCorpus(format!("document {:?} has an empty sentence", doc.id)));
                }
                if s.iter().any(|&id| id as usize >= vocabulary.len()) {
                    return Err(Error::Domain(format!(
                        "document {:?} contains a token id outside the vocabulary",
                        doc.id
                    )));
                }
                n_tokens += s.len();
            }
            n_sentences += doc.sentences.len();
        }
        Ok(Self { documents, vocabulary, n_tokens, n_sentences })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    /// N: total tokens.
    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    /// M: total sentences.
    pub fn n_sentences(&self) -> usize {
        self.n_sentences
    }

    /// L: total documents.
    pub fn n_documents(&self) -> usize {
        self.documents.len()
    }

    /// V: vocabulary size.
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Decodes back to token strings (inverse of [`encode`] for in-vocabulary
    /// input).
    pub fn decode(&self) -> Vec<RawDocument> {
        self.documents
            .iter()
            .map(|d| RawDocument {
                id: d.id.clone(),
                sentences: d
                    .sentences
                    .iter()
                    .map(|s| s.iter().map(|&id| self.vocabulary.token(id).to_string()).collect())
                    .collect(),
            })
            .collect()
    }
}

/// Corpus flattened for samplers: tokens in corpus order with sentence and
/// document indices, so per-site loops are plain array walks.
#[derive(Debug, Clone)]
pub struct FlatView {
    /// Token ids, corpus order.
    pub tokens: Vec<u32>,
    /// Global sentence index of each token.
    pub token_sent: Vec<u32>,
    /// Sentence s spans tokens[sent_start[s]..sent_start[s+1]].
    pub sent_start: Vec<usize>,
    /// Document index of each sentence.
    pub sent_doc: Vec<u32>,
}

impl FlatView {
    pub fn new(corpus: &Corpus) -> Self {
        let mut tokens = Vec::with_capacity(corpus.n_tokens());
        let mut token_sent = Vec::with_capacity(corpus.n_tokens());
        let mut sent_start = Vec::with_capacity(corpus.n_sentences() + 1);
        let mut sent_doc = Vec::with_capacity(corpus.n_sentences());
        sent_start.push(0);
        for (d, doc) in corpus.documents().iter().enumerate() {
            for sent in &doc.sentences {
                let s = sent_doc.len() as u32;
                for &w in sent {
                    tokens.push(w);
                    token_sent.push(s);
                }
                sent_start.push(tokens.len());
                sent_doc.push(d as u32);
            }
        }
        Self { tokens, token_sent, sent_start, sent_doc }
    }

    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn n_sentences(&self) -> usize {
        self.sent_doc.len()
    }

    /// Token-offset range of sentence `s`.
    pub fn sentence_span(&self, s: usize) -> std::ops::Range<usize> {
        self.sent_start[s]..self.sent_start[s + 1]
    }
}

/// Splits text into sentences on '.', '!' or '?' followed by whitespace (or
/// end of input), and on blank lines. Terminators stay with their sentence;
/// results are trimmed and empties dropped.
pub fn segment_sentences(raw_text: &str) -> Vec<String> {
    let mut out = Vec::new();
    // Blank lines are hard boundaries; scan each block for terminators.
    for block in raw_text.split("\n\n") {
        let chars: Vec<char> = block.chars().collect();
        let mut start = 0;
        for (i, &c) in chars.iter().enumerate() {
            if matches!(c, '.' | '!' | '?') {
                let at_end = i + 1 == chars.len();
                if at_end || chars[i + 1].is_whitespace() {
                    let sentence: String = chars[start..=i].iter().collect();
                    let sentence = sentence.trim();
                    if !sentence.is_empty() {
                        out.push(sentence.to_string());
                    }
                    start = i + 1;
                }
            }
        }
        if start < chars.len() {
            let tail: String = chars[start..].iter().collect();
            let tail = tail.trim();
            if !tail.is_empty() {
                out.push(tail.to_string());
            }
        }
    }
    out
}

/// Lowercases, splits on whitespace, strips leading/trailing non-alphanumeric
/// characters (interior punctuation is kept), and drops empty results.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .split_whitespace()
        .filter_map(|w| {
            let trimmed = w.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_lowercase())
            }
        })
        .collect()
}

/// Builds a vocabulary over all tokens in `docs`, keeping tokens with corpus
/// frequency ≥ `min_count`. Ids are assigned in descending-frequency order,
/// ties broken lexicographically.
pub fn build_vocabulary(docs: &[RawDocument], min_count: u64) -> Result<Vocabulary> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for sentence in &doc.sentences {
            for token in sentence {
                *counts.entry(token.as_str()).or_insert(0) += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus("no tokens in input".into()));
    }
    let mut retained: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .collect();
    if retained.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no token reaches min_count = {min_count}"
        )));
    }
    retained.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let tokens: Vec<String> = retained.iter().map(|(t, _)| t.to_string()).collect();
    let frequencies: Vec<u64> = retained.iter().map(|&(_, c)| c).collect();
    Vocabulary::from_tokens(tokens, frequencies)
}

/// Encodes documents against a vocabulary. Out-of-vocabulary tokens are
/// dropped; sentences and documents emptied by dropping are removed. Errors if
/// nothing survives.
pub fn encode(docs: &[RawDocument], vocab: Arc<Vocabulary>) -> Result<Corpus> {
    if vocab.is_empty() {
        return Err(Error::Domain("cannot encode with an empty vocabulary".into()));
    }
    let mut documents = Vec::new();
    for doc in docs {
        let sentences: Vec<Sentence> = doc
            .sentences
            .iter()
            .map(|s| s.iter().filter_map(|t| vocab.id(t)).collect::<Sentence>())
            .filter(|s| !s.is_empty())
            .collect();
        if !sentences.is_empty() {
            documents.push(Document { id: doc.id.clone(), sentences });
        }
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus("no document survives encoding".into()));
    }
    Corpus::from_documents(documents, vocab)
}

/// Builds a corpus from non-empty encoded documents and a matching
/// vocabulary. Used by the synthetic generator, which produces ids directly.
pub fn corpus_from_encoded(documents: Vec<Document>, vocab: Arc<Vocabulary>) -> Result<Corpus> {
    Corpus::from_documents(documents, vocab)
}

/// Document-level train/test split: documents are shuffled by `rng`,
/// ⌈test_fraction·L⌉ go to test, and both sides keep the original relative
/// document order and share the vocabulary object.
pub fn split(corpus: &Corpus, test_fraction: f64, rng: &mut RngStream) -> Result<(Corpus, Corpus)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "test_fraction must lie in (0,1), got {test_fraction}"
        )));
    }
    let l = corpus.n_documents();
    if l < 2 {
        return Err(Error::Split("need at least 2 documents to split".into()));
    }
    let n_test = (test_fraction * l as f64).ceil() as usize;
    if n_test == 0 || n_test >= l {
        return Err(Error::Split(format!(
            "fraction {test_fraction} would leave an empty partition ({n_test} of {l} to test)"
        )));
    }
    // Fisher–Yates on indices; the first n_test shuffled positions go to test.
    let mut order: Vec<usize> = (0..l).collect();
    for i in (1..l).rev() {
        order.swap(i, rng.uniform_index(i + 1));
    }
    let mut is_test = vec![false; l];
    for &i in order.iter().take(n_test) {
        is_test[i] = true;
    }
    let mut train_docs = Vec::with_capacity(l - n_test);
    let mut test_docs = Vec::with_capacity(n_test);
    for (doc, &t) in corpus.documents.iter().zip(&is_test) {
        if t {
            test_docs.push(doc.clone());
        } else {
            train_docs.push(doc.clone());
        }
    }
    Ok((
        Corpus::from_documents(train_docs, Arc::clone(&corpus.vocabulary))?,
        Corpus::from_documents(test_docs, Arc::clone(&corpus.vocabulary))?,
    ))
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    CorpusStats {
        documents: corpus.n_documents(),
        sentences: corpus.n_sentences(),
        tokens: corpus.n_tokens(),
        vocab_size: corpus.vocab_size(),
        mean_sentences_per_document: corpus.n_sentences() as f64 / corpus.n_documents() as f64,
    }
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Reads JSONL documents: one `{"id": ..., "sentences": [[token, ...], ...]}`
/// object per line; blank lines are skipped.
pub fn read_jsonl(path: &Path) -> Result<Vec<RawDocument>> {
    let file = fs::File::open(path)?;
    let mut docs = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument = serde_json::from_str(&line).map_err(|e| {
            Error::Domain(format!("{}:{}: invalid document: {e}", path.display(), lineno + 1))
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_jsonl<W: Write>(mut w: W, docs: &[RawDocument]) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut w, doc)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a directory of plain-text files (one document per file, filename
/// order) and applies [`segment_sentences`] + [`tokenize`]. Document ids are
/// the file names.
pub fn read_text_dir(dir: &Path) -> Result<Vec<RawDocument>> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut docs = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path)?;
        let sentences: Vec<Vec<String>> = segment_sentences(&text)
            .iter()
            .map(|s| tokenize(s))
            .filter(|t| !t.is_empty())
            .collect();
        if !sentences.is_empty() {
            let id = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            docs.push(RawDocument { id, sentences });
        }
    }
    Ok(docs)
}

/// Reads a JSONL corpus file and encodes it against a vocabulary built from
/// its own tokens (min_count 1). Re-loading a pruned, ingested corpus
/// reproduces the ingest-time vocabulary because pruning already removed
/// sub-threshold tokens without changing retained frequencies.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let docs = read_jsonl(path)?;
    if docs.is_empty() {
        return Err(Error::EmptyCorpus(format!("{} holds no documents", path.display())));
    }
    let vocab = Arc::new(build_vocabulary(&docs, 1)?);
    encode(&docs, vocab)
}
