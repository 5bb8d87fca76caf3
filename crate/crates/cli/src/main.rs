//! `slda` — train, evaluate, and tune sentence-layered topic models from the
//! command line. Corpora are JSONL (one document per line with its sentences
//! as token lists); models are self-contained JSON files. All commands are
//! deterministic for a fixed `--seed`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser)]
#[command(name = "slda", version, about = "Sentence-layered topic modeling")]
struct Cli {
    /// Master seed; every randomized step derives from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// One JSON document per line: {"id": ..., "sentences": [[token, ...], ...]}.
    Jsonl,
    /// Directories of plain-text files, segmented and tokenized on ingest.
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    /// Sentence-layered model.
    Slda,
    /// Flat LDA over sentences as units.
    Lda,
    /// Flat LDA over whole documents.
    #[value(name = "lda.doc")]
    LdaDoc,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize raw input into a corpus file plus vocabulary table.
    Ingest {
        /// Input files (jsonl) or directories (text).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = InputFormat::Jsonl)]
        format: InputFormat,
        /// Drop tokens occurring fewer than this many times overall.
        #[arg(long, default_value_t = 1)]
        min_count: u64,
        /// Hold out this fraction of documents (requires --test-out).
        #[arg(long)]
        test_fraction: Option<f64>,
        /// Where to write the held-out documents.
        #[arg(long, requires = "test_fraction")]
        test_out: Option<PathBuf>,
        /// Output corpus (JSONL).
        #[arg(long)]
        out: PathBuf,
        /// Output vocabulary (token<TAB>id<TAB>frequency).
        #[arg(long)]
        vocab_out: PathBuf,
    },

    /// Train a model on a corpus file and write the model JSON.
    Train {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelKind::Slda)]
        kind: ModelKind,
        /// Sentence-topic count S (sentence-layered model only).
        #[arg(long, default_value_t = 20)]
        sentence_topics: usize,
        /// Word-topic count T.
        #[arg(long, default_value_t = 10)]
        word_topics: usize,
        /// Document-level prior (defaults to the built-in regression, or
        /// 50/T for the flat baselines).
        #[arg(long)]
        alpha: Option<f64>,
        /// Word-level prior (defaults to the built-in regression, or 0.01
        /// for the flat baselines).
        #[arg(long)]
        beta: Option<f64>,
        /// Sentence-to-word-topic prior (sentence-layered model only;
        /// defaults to the built-in regression).
        #[arg(long)]
        gamma: Option<f64>,
        /// Training sweeps.
        #[arg(long, default_value_t = 1000)]
        burn_in: u32,
        #[arg(long)]
        out: PathBuf,
    },

    /// Score a model on held-out documents; prints the final perplexity.
    Eval {
        model: PathBuf,
        test: PathBuf,
        /// Test-side sweeps before the readout.
        #[arg(long, default_value_t = 500)]
        test_burn_in: u32,
        /// Write a perplexity-vs-sweep trace CSV here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },

    /// Grid-search (S, T, α, β, γ) against a dev split; writes all cells and
    /// the per-(S, T) winners.
    Grid {
        train: PathBuf,
        dev: PathBuf,
        /// Comma-separated values tried for S and for T.
        #[arg(long, value_delimiter = ',', default_values_t = vec![5usize, 10, 50, 100])]
        topic_counts: Vec<usize>,
        /// Comma-separated values tried for each prior.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.01, 0.005, 0.001])]
        prior_values: Vec<f64>,
        /// Training sweeps per cell.
        #[arg(long, default_value_t = 200)]
        cell_burn_in: u32,
        /// Test-side sweeps when scoring a cell on the dev split.
        #[arg(long, default_value_t = 100)]
        dev_burn_in: u32,
        /// Output CSV; the per-(S, T) winners go to the companion
        /// "<stem>-best.csv".
        #[arg(long)]
        out: PathBuf,
    },

    /// Refit the prior-regression equations from a grid CSV.
    FitPriors { grid_csv: PathBuf },

    /// Sample a corpus from the generative model.
    Synth {
        #[arg(long)]
        sentence_topics: usize,
        #[arg(long)]
        word_topics: usize,
        #[arg(long)]
        vocab_size: usize,
        #[arg(long)]
        docs: usize,
        #[arg(long)]
        sentences_per_doc: usize,
        #[arg(long)]
        words_per_sentence: usize,
        /// Generating priors (default: the built-in regression at S, T).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Output corpus (JSONL).
        #[arg(long)]
        out: PathBuf,
        /// Also write the generating parameters and assignments here.
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        slda_core::par::init_thread_pool(jobs);
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
