use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use slda_core::corpus::{
    build_vocabulary, corpus_stats, encode, load_corpus, read_jsonl, read_text_dir, split,
    write_jsonl, Corpus, RawDocument, Vocabulary,
};
use slda_core::eval::{
    evaluate_lda, evaluate_slda, generate_synthetic, write_trace_csv, HeldoutConfig,
    SyntheticTruth,
};
use slda_core::hyper::{
    default_lda_priors, fit_prior_regression, read_grid_csv, regress_priors, run_grid,
    select_best, write_grid_csv, GridSpec,
};
use slda_core::lda::{train_lda_quiet, Granularity, LdaHyper, LdaModelFile, LDA_FORMAT};
use slda_core::rng::RngStream;
use slda_core::slda::{train_quiet, Hyperparams, SldaModelFile, SLDA_FORMAT};
use slda_core::{Error, Result};

use crate::{Cli, Command, InputFormat, ModelKind};

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Ingest {
            inputs,
            format,
            min_count,
            test_fraction,
            test_out,
            out,
            vocab_out,
        } => ingest(&inputs, format, min_count, test_fraction, test_out, &out, &vocab_out, seed),
        Command::Train {
            corpus,
            kind,
            sentence_topics,
            word_topics,
            alpha,
            beta,
            gamma,
            burn_in,
            out,
        } => train(&corpus, kind, sentence_topics, word_topics, alpha, beta, gamma, burn_in, &out, seed),
        Command::Eval { model, test, test_burn_in, trace_out } => {
            eval(&model, &test, test_burn_in, trace_out, seed)
        }
        Command::Grid {
            train,
            dev,
            topic_counts,
            prior_values,
            cell_burn_in,
            dev_burn_in,
            out,
        } => grid(&train, &dev, topic_counts, prior_values, cell_burn_in, dev_burn_in, &out, seed),
        Command::FitPriors { grid_csv } => fit_priors(&grid_csv),
        Command::Synth {
            sentence_topics,
            word_topics,
            vocab_size,
            docs,
            sentences_per_doc,
            words_per_sentence,
            alpha,
            beta,
            gamma,
            out,
            truth_out,
        } => synth(
            sentence_topics,
            word_topics,
            vocab_size,
            docs,
            sentences_per_doc,
            words_per_sentence,
            alpha,
            beta,
            gamma,
            &out,
            truth_out,
            seed,
        ),
    }
}

fn io_ctx(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| io_ctx(path, e))?))
}

#[allow(clippy::too_many_arguments)]
fn ingest(
    inputs: &[PathBuf],
    format: InputFormat,
    min_count: u64,
    test_fraction: Option<f64>,
    test_out: Option<PathBuf>,
    out: &Path,
    vocab_out: &Path,
    seed: u64,
) -> Result<()> {
    let mut docs: Vec<RawDocument> = Vec::new();
    for input in inputs {
        let mut batch = match format {
            InputFormat::Jsonl => read_jsonl(input)?,
            InputFormat::Text => read_text_dir(input)?,
        };
        docs.append(&mut batch);
    }

    // The vocabulary always comes from the full stream, before any split, so
    // train and held-out files agree on ids and frequencies.
    let vocab = Arc::new(build_vocabulary(&docs, min_count)?);
    let corpus = encode(&docs, Arc::clone(&vocab))?;

    let mut tsv = Vec::new();
    vocab.write_tsv(&mut tsv)?;
    let mut w = create(vocab_out)?;
    w.write_all(&tsv)?;
    w.flush()?;

    let report = |name: &str, c: &Corpus| {
        let s = corpus_stats(c);
        eprintln!(
            "{name}: {} documents, {} sentences, {} tokens, vocabulary {}",
            s.documents, s.sentences, s.tokens, s.vocab_size
        );
    };

    match test_fraction {
        None => {
            let mut w = create(out)?;
            write_jsonl(&mut w, &corpus.decode())?;
            w.flush()?;
            report("corpus", &corpus);
        }
        Some(fraction) => {
            let test_out = test_out.ok_or_else(|| {
                Error::Domain("--test-fraction requires --test-out".into())
            })?;
            let mut rng = RngStream::new(seed);
            let (train_side, test_side) = split(&corpus, fraction, &mut rng)?;
            let mut w = create(out)?;
            write_jsonl(&mut w, &train_side.decode())?;
            w.flush()?;
            let mut w = create(&test_out)?;
            write_jsonl(&mut w, &test_side.decode())?;
            w.flush()?;
            report("train", &train_side);
            report("test", &test_side);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train(
    corpus_path: &Path,
    kind: ModelKind,
    sentence_topics: usize,
    word_topics: usize,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    burn_in: u32,
    out: &Path,
    seed: u64,
) -> Result<()> {
    let corpus = Arc::new(load_corpus(corpus_path)?);
    let vocab = corpus.vocabulary().tokens().to_vec();
    let json = match kind {
        ModelKind::Slda => {
            let defaults = regress_priors(sentence_topics, word_topics)?;
            let hyper = Hyperparams {
                alpha: alpha.unwrap_or(defaults.alpha),
                beta: beta.unwrap_or(defaults.beta),
                gamma: gamma.unwrap_or(defaults.gamma),
                s: sentence_topics,
                t: word_topics,
            };
            let model = train_quiet(&corpus, hyper, burn_in, seed)?;
            eprintln!(
                "trained slda: S={} T={} alpha={} beta={} gamma={} burn_in={burn_in}",
                hyper.s, hyper.t, hyper.alpha, hyper.beta, hyper.gamma
            );
            SldaModelFile::new(model, &hyper, seed, burn_in, vocab).to_json()?
        }
        ModelKind::Lda | ModelKind::LdaDoc => {
            if gamma.is_some() {
                return Err(Error::Domain(
                    "--gamma applies only to the sentence-layered model".into(),
                ));
            }
            let granularity = match kind {
                ModelKind::Lda => Granularity::Sentence,
                _ => Granularity::Document,
            };
            let (da, db) = default_lda_priors(word_topics)?;
            let hyper = LdaHyper {
                alpha: alpha.unwrap_or(da),
                beta: beta.unwrap_or(db),
                t: word_topics,
            };
            let model = train_lda_quiet(&corpus, granularity, hyper, burn_in, seed)?;
            eprintln!(
                "trained {}: T={} alpha={} beta={} burn_in={burn_in}",
                granularity.label(),
                hyper.t,
                hyper.alpha,
                hyper.beta
            );
            LdaModelFile::new(model, granularity, &hyper, seed, burn_in, vocab).to_json()?
        }
    };
    let mut w = create(out)?;
    writeln!(w, "{json}")?;
    w.flush()?;
    Ok(())
}

fn eval(
    model_path: &Path,
    test_path: &Path,
    test_burn_in: u32,
    trace_out: Option<PathBuf>,
    seed: u64,
) -> Result<()> {
    let text = std::fs::read_to_string(model_path).map_err(|e| io_ctx(model_path, e))?;
    let peek: serde_json::Value = serde_json::from_str(&text)?;
    let format = peek
        .get("format")
        .and_then(|f| f.as_str())
        .ok_or_else(|| Error::Domain(format!("{} has no format field", model_path.display())))?
        .to_string();

    let config = HeldoutConfig { test_burn_in, trace_every: 10 };
    let (ppl, trace) = match format.as_str() {
        SLDA_FORMAT => {
            let model = SldaModelFile::from_json(&text)?;
            let test = encode_against(&model.vocab, test_path)?;
            evaluate_slda(&model.phi, &model.hyper(), &test, &config, seed)?
        }
        LDA_FORMAT => {
            let model = LdaModelFile::from_json(&text)?;
            let test = encode_against(&model.vocab, test_path)?;
            evaluate_lda(&model.phi, model.alpha, model.granularity()?, &test, &config, seed)?
        }
        other => {
            return Err(Error::Domain(format!("unknown model format {other:?}")));
        }
    };

    if let Some(path) = trace_out {
        let mut w = create(&path)?;
        write_trace_csv(&mut w, &[&trace])?;
        w.flush()?;
    }
    println!("{ppl:.4}");
    Ok(())
}

/// Encodes held-out documents against a model's embedded vocabulary;
/// out-of-vocabulary tokens are dropped.
fn encode_against(vocab_tokens: &[String], test_path: &Path) -> Result<Corpus> {
    let vocab = Vocabulary::from_tokens(vocab_tokens.to_vec(), vec![0; vocab_tokens.len()])?;
    let docs = read_jsonl(test_path)?;
    encode(&docs, Arc::new(vocab))
}

#[allow(clippy::too_many_arguments)]
fn grid(
    train_path: &Path,
    dev_path: &Path,
    topic_counts: Vec<usize>,
    prior_values: Vec<f64>,
    cell_burn_in: u32,
    dev_burn_in: u32,
    out: &Path,
    seed: u64,
) -> Result<()> {
    let train = Arc::new(load_corpus(train_path)?);
    // The dev split is encoded with the training vocabulary so cells score a
    // consistent token stream.
    let dev_docs = read_jsonl(dev_path)?;
    let dev = Arc::new(encode(&dev_docs, Arc::clone(train.vocabulary()))?);
    let spec = GridSpec {
        topic_counts,
        prior_values,
        train_burn_in: cell_burn_in,
        eval_burn_in: dev_burn_in,
    };
    let outcome = run_grid(&train, &dev, &spec, seed)?;

    let mut w = create(out)?;
    write_grid_csv(&mut w, &outcome.records)?;
    w.flush()?;
    let best = best_path(out);
    let mut w = create(&best)?;
    write_grid_csv(&mut w, &outcome.best)?;
    w.flush()?;
    eprintln!(
        "grid: {} cells -> {}; {} winners -> {}",
        outcome.records.len(),
        out.display(),
        outcome.best.len(),
        best.display()
    );
    Ok(())
}

/// `grid.csv` -> `grid-best.csv`.
fn best_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}-best.{}", ext.to_string_lossy()),
        None => format!("{stem}-best"),
    };
    out.with_file_name(name)
}

fn fit_priors(grid_csv: &Path) -> Result<()> {
    let file = File::open(grid_csv).map_err(|e| io_ctx(grid_csv, e))?;
    let records = read_grid_csv(file)?;
    // Reduce to one winner per (S, T) first, so the command accepts either
    // the full grid or the companion winners file.
    let best = select_best(&records);
    let fit = fit_prior_regression(&best)?;
    println!(
        "alpha = {}/S    (adjusted R^2 = {})",
        fit.alpha.coefficients[0], fit.alpha.adjusted_r_squared
    );
    println!(
        "beta  = {}*S + {}/T    (adjusted R^2 = {})",
        fit.beta.coefficients[0], fit.beta.coefficients[1], fit.beta.adjusted_r_squared
    );
    println!(
        "gamma = {}*S + {}/T    (adjusted R^2 = {})",
        fit.gamma.coefficients[0], fit.gamma.coefficients[1], fit.gamma.adjusted_r_squared
    );
    Ok(())
}

/// Generating parameters and assignments alongside a synthetic corpus.
#[derive(Serialize)]
struct TruthFile<'a> {
    format: &'static str,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "T")]
    t: usize,
    #[serde(rename = "V")]
    v: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    seed: u64,
    #[serde(flatten)]
    truth: &'a SyntheticTruth,
}

#[allow(clippy::too_many_arguments)]
fn synth(
    sentence_topics: usize,
    word_topics: usize,
    vocab_size: usize,
    docs: usize,
    sentences_per_doc: usize,
    words_per_sentence: usize,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    out: &Path,
    truth_out: Option<PathBuf>,
    seed: u64,
) -> Result<()> {
    let defaults = regress_priors(sentence_topics, word_topics)?;
    let hyper = Hyperparams {
        alpha: alpha.unwrap_or(defaults.alpha),
        beta: beta.unwrap_or(defaults.beta),
        gamma: gamma.unwrap_or(defaults.gamma),
        s: sentence_topics,
        t: word_topics,
    };
    let (corpus, truth) =
        generate_synthetic(&hyper, docs, sentences_per_doc, words_per_sentence, vocab_size, seed)?;
    let mut w = create(out)?;
    write_jsonl(&mut w, &corpus.decode())?;
    w.flush()?;
    if let Some(path) = truth_out {
        let file = TruthFile {
            format: "slda-truth/1",
            s: hyper.s,
            t: hyper.t,
            v: vocab_size,
            alpha: hyper.alpha,
            beta: hyper.beta,
            gamma: hyper.gamma,
            seed,
            truth: &truth,
        };
        let mut w = create(&path)?;
        writeln!(w, "{}", serde_json::to_string(&file)?)?;
        w.flush()?;
    }
    let s = corpus_stats(&corpus);
    eprintln!(
        "synthesized {} documents, {} sentences, {} tokens, vocabulary {}",
        s.documents, s.sentences, s.tokens, s.vocab_size
    );
    Ok(())
}
