//! Pipeline configuration: a TOML file merged with built-in defaults.
//! Command-line flags override the file; the file overrides the defaults.
//!
//! Randomness flows from the single master seed. Each randomised stage
//! draws from its own stream, seeded by the first eight little-endian
//! bytes of `SHA-256("<stage>:<seed>")`, so adding sweeps to `fit` can
//! never change what `simulate` generates.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use emergence_core::corpus::{read_wordlist, PreprocessConfig};
use emergence_core::lda::LdaConfig;
use emergence_core::synthgen::{
    inject_trend, AlphaProfile, BetaSpec, DocLength, SynthSpec, TrendShape,
};
use emergence_core::trend::Correction;

use crate::Failure;

pub const DEFAULT_SEED: u64 = 42;

/// Derives a stage-specific RNG seed from the master seed.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let digest = Sha256::digest(format!("{stage}:{seed}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
    #[serde(default)]
    pub lda: LdaSection,
    #[serde(default)]
    pub trend: TrendSection,
    #[serde(default)]
    pub align: AlignSection,
    #[serde(default)]
    pub synth: SynthSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    /// Input corpus JSONL (ingest).
    pub corpus: Option<PathBuf>,
    /// Extra stopwords, one term per line (ingest).
    pub stopwords: Option<PathBuf>,
    /// Terms to exclude outright, one per line (ingest).
    pub exclusions: Option<PathBuf>,
    /// Indicator CSV with columns name,year,count (align, report).
    pub indicators: Option<PathBuf>,
    /// Output directory; all stage files live here.
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    /// Start from the pass-everything profile instead of the default one.
    pub passthrough: Option<bool>,
    pub min_token_len: Option<usize>,
    pub builtin_stopwords: Option<bool>,
    pub min_df: Option<usize>,
    pub max_df: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaSection {
    pub topics: Option<usize>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub burn_in: Option<usize>,
    pub samples: Option<usize>,
    pub thin: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendSection {
    pub alpha: Option<f64>,
    pub correction: Option<Correction>,
    pub confidence: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignSection {
    pub max_lag: Option<i32>,
    pub min_overlap: Option<usize>,
    pub near_window: Option<i32>,
}

/// Symmetric scalar, one row shared by all periods, or a full
/// period-by-topic table.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum AlphaSetting {
    Symmetric(f64),
    Row(Vec<f64>),
    PerPeriod(Vec<Vec<f64>>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub topics: Option<usize>,
    pub vocab_size: Option<usize>,
    pub docs_per_period: Option<usize>,
    pub periods: Option<usize>,
    pub start_period: Option<i32>,
    /// A fixed token count, or [lo, hi] drawn uniformly (inclusive).
    pub doc_length: Option<DocLength>,
    pub alpha: Option<AlphaSetting>,
    /// Symmetric Dirichlet parameter for the topic-term rows.
    pub eta: Option<f64>,
    pub trend: Option<SynthTrendSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthTrendSection {
    pub topic: usize,
    pub start_share: f64,
    pub end_share: f64,
    pub shape: TrendShape,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::input(format!("config {}: {e}", path.display())))
}

/// The merged view the commands work from.
pub struct Settings {
    pub seed: u64,
    pub output: PathBuf,
    pub file: FileConfig,
}

impl Settings {
    pub fn new(seed_flag: Option<u64>, output_flag: Option<PathBuf>, file: FileConfig) -> Self {
        let seed = seed_flag.or(file.seed).unwrap_or(DEFAULT_SEED);
        let output = output_flag
            .or_else(|| file.paths.output.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Settings { seed, output, file }
    }

    /// Resolves the preprocessing profile, loading any configured
    /// stopword and exclusion files.
    pub fn preprocess(&self, passthrough_flag: bool) -> Result<PreprocessConfig, Failure> {
        let section = &self.file.preprocess;
        let mut config = if passthrough_flag || section.passthrough.unwrap_or(false) {
            PreprocessConfig::passthrough()
        } else {
            PreprocessConfig::default()
        };
        if let Some(v) = section.min_token_len {
            config.min_token_len = v;
        }
        if let Some(v) = section.builtin_stopwords {
            config.builtin_stopwords = v;
        }
        if let Some(v) = section.min_df {
            config.min_df = v;
        }
        if let Some(v) = section.max_df {
            config.max_df = v;
        }
        if let Some(path) = &self.file.paths.stopwords {
            config.extra_stopwords = read_words(path)?;
        }
        if let Some(path) = &self.file.paths.exclusions {
            config.exclusions = read_words(path)?;
        }
        config
            .validate()
            .map_err(|e| Failure::input(e.to_string()))?;
        Ok(config)
    }

    /// Resolves the sampler configuration. The topic count has no safe
    /// default and must come from a flag or the config file.
    pub fn lda(&self, topics_flag: Option<usize>) -> Result<LdaConfig, Failure> {
        let section = &self.file.lda;
        let topics = topics_flag.or(section.topics).ok_or_else(|| {
            Failure::input("number of topics not set; pass --topics or set [lda] topics")
        })?;
        let mut config = LdaConfig::with_defaults(topics, stage_seed(self.seed, "fit"));
        if let Some(v) = section.alpha {
            config.alpha = v;
        }
        if let Some(v) = section.eta {
            config.eta = v;
        }
        if let Some(v) = section.burn_in {
            config.burn_in = v;
        }
        if let Some(v) = section.samples {
            config.samples = v;
        }
        if let Some(v) = section.thin {
            config.thin = v;
        }
        Ok(config)
    }

    /// Trend-stage settings: (significance level, correction, confidence).
    pub fn trend(&self) -> (f64, Correction, f64) {
        let section = &self.file.trend;
        (
            section.alpha.unwrap_or(0.01),
            section.correction.unwrap_or(Correction::Bonferroni),
            section.confidence.unwrap_or(0.95),
        )
    }

    /// Align-stage settings: (max_lag, min_overlap, near_window).
    pub fn align(&self) -> (i32, usize, i32) {
        let section = &self.file.align;
        (
            section.max_lag.unwrap_or(10),
            section.min_overlap.unwrap_or(10),
            section.near_window.unwrap_or(2),
        )
    }

    /// Resolves the synthetic-corpus spec, applying any configured trend
    /// injection.
    pub fn synth(&self) -> Result<SynthSpec, Failure> {
        let section = &self.file.synth;
        let topics = section.topics.unwrap_or(5);
        let alpha = match &section.alpha {
            None => AlphaProfile::Constant(vec![0.6; topics]),
            Some(AlphaSetting::Symmetric(a)) => AlphaProfile::Constant(vec![*a; topics]),
            Some(AlphaSetting::Row(row)) => AlphaProfile::Constant(row.clone()),
            Some(AlphaSetting::PerPeriod(rows)) => AlphaProfile::PerPeriod(rows.clone()),
        };
        let spec = SynthSpec {
            topics,
            vocab_size: section.vocab_size.unwrap_or(200),
            docs_per_period: section.docs_per_period.unwrap_or(25),
            periods: section.periods.unwrap_or(40),
            start_period: section.start_period.unwrap_or(1970),
            doc_length: section.doc_length.unwrap_or(DocLength::Fixed(100)),
            alpha,
            beta: BetaSpec::Dirichlet {
                eta: section.eta.unwrap_or(0.05),
            },
            seed: stage_seed(self.seed, "simulate"),
        };
        let spec = match &section.trend {
            None => spec,
            Some(t) => inject_trend(&spec, t.topic, t.start_share, t.end_share, t.shape)
                .map_err(|e| Failure::input(e.to_string()))?,
        };
        spec.validate().map_err(|e| Failure::input(e.to_string()))?;
        Ok(spec)
    }

    /// The indicator CSV to use: explicit flag, then the configured path.
    pub fn indicators_path(&self, flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.file.paths.indicators.clone())
    }
}

fn read_words(path: &Path) -> Result<std::collections::HashSet<String>, Failure> {
    let file = std::fs::File::open(path)
        .map_err(|e| Failure::input(format!("cannot open {}: {e}", path.display())))?;
    read_wordlist(std::io::BufReader::new(file))
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}
