//! `emergence` — command-line pipeline for detecting emerging topics in
//! longitudinal text corpora.
//!
//! The stages compose through files in one output directory:
//!
//! ```text
//! simulate ─► corpus.jsonl + truth.json        (optional, synthetic data)
//! ingest   ─► matrix.txt + vocab.txt
//! fit      ─► model.json
//! trend    ─► series.csv + trend.json
//! align    ─► align.json + lag_profiles.csv    (needs an indicator CSV)
//! report   ─► report.json + fig_*.csv
//! ```
//!
//! Every stage is deterministic given the same inputs, configuration, and
//! `--seed`; rerunning a stage reproduces its outputs byte for byte.

mod commands;
mod config;
mod out;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Failures carry the process exit code: bad input or configuration exits
/// 1, a broken internal invariant exits 2.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    pub fn input(msg: impl Into<String>) -> Self {
        Failure::Input(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Failure::Internal(msg.into())
    }
}

#[derive(Parser)]
#[command(
    name = "emergence",
    version,
    about = "Detect emerging topics in longitudinal text corpora",
    long_about = "Fits a topic model to a period-stamped corpus, tests each topic's \
                  prevalence series for sustained increase, and aligns topic series \
                  with external indicator series at integer lags.\n\n\
                  Settings come from a TOML file (--config) overridden by flags; \
                  flags win over the file, the file wins over built-in defaults."
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; each randomised stage derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory the pipeline reads and writes its files in.
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with known topics, optionally with a
    /// planted prevalence trend ([synth] section).
    Simulate,

    /// Tokenize a JSONL corpus into a vocabulary and document-term matrix.
    Ingest {
        /// Corpus JSONL file (defaults to the configured path, then to
        /// corpus.jsonl in the output directory).
        #[arg(long, value_name = "PATH")]
        corpus: Option<PathBuf>,

        /// Disable stopword removal and frequency pruning; intended for
        /// synthetic corpora whose terms must pass through unchanged.
        #[arg(long)]
        passthrough: bool,
    },

    /// Fit the topic model by collapsed Gibbs sampling.
    Fit {
        #[arg(long)]
        topics: Option<usize>,
        /// Symmetric document-topic prior (defaults to 50/K).
        #[arg(long)]
        alpha: Option<f64>,
        /// Symmetric topic-term prior.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, value_name = "SWEEPS")]
        burn_in: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        /// Ground-truth JSON from `simulate`; prints recovery metrics.
        #[arg(long, value_name = "PATH")]
        truth: Option<PathBuf>,
    },

    /// Print each topic's highest-probability words.
    Topics {
        #[arg(long, default_value_t = 10)]
        words: usize,
    },

    /// Aggregate per-period prevalence series and test each topic for
    /// monotone increase.
    Trend {
        /// Significance level for the emergence decision.
        #[arg(long)]
        alpha: Option<f64>,
        /// Multiple-comparison correction: none or bonferroni.
        #[arg(long)]
        correction: Option<String>,
        /// Confidence level for the slope interval.
        #[arg(long)]
        confidence: Option<f64>,
    },

    /// Correlate topic series with indicator series across integer lags.
    Align {
        /// Indicator CSV with columns name,year,count.
        #[arg(long, value_name = "PATH")]
        indicators: Option<PathBuf>,
        #[arg(long)]
        max_lag: Option<i32>,
        #[arg(long)]
        min_overlap: Option<usize>,
        #[arg(long)]
        near_window: Option<i32>,
    },

    /// Bundle stage outputs into report.json plus plot-data CSVs.
    Report {
        /// Indicator CSV used for the joint prevalence/indicator figure.
        #[arg(long, value_name = "PATH")]
        indicators: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = config::load(cli.config.as_deref())?;
    let settings = config::Settings::new(cli.seed, cli.output, file);
    match cli.command {
        Command::Simulate => commands::simulate(&settings),
        Command::Ingest { corpus, passthrough } => {
            commands::ingest(&settings, corpus.as_deref(), passthrough)
        }
        Command::Fit {
            topics,
            alpha,
            eta,
            burn_in,
            samples,
            thin,
            truth,
        } => {
            let overrides = commands::FitOverrides {
                topics,
                alpha,
                eta,
                burn_in,
                samples,
                thin,
            };
            commands::fit(&settings, &overrides, truth.as_deref())
        }
        Command::Topics { words } => commands::topics(&settings, words),
        Command::Trend {
            alpha,
            correction,
            confidence,
        } => commands::trend(&settings, alpha, correction.as_deref(), confidence),
        Command::Align {
            indicators,
            max_lag,
            min_overlap,
            near_window,
        } => {
            let overrides = commands::AlignOverrides {
                max_lag,
                min_overlap,
                near_window,
            };
            commands::align(&settings, indicators.as_deref(), &overrides)
        }
        Command::Report { indicators } => commands::report(&settings, indicators.as_deref()),
    }
}
