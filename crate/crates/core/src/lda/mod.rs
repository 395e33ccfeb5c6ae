//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! The sampler integrates out the topic mixtures and topic–term
//! distributions and resamples one token's topic at a time from
//! `p(z=k) ∝ (n_dk + α)(n_kv + η)/(n_k + Vη)`. After burn-in, count
//! states are collected at a fixed thinning interval and averaged into
//! posterior-mean estimates
//!
//! * `θ̂_dk = mean (n_dk + α)/(N_d + Kα)`  (document–topic shares)
//! * `β̂_kv = mean (n_kv + η)/(n_k + Vη)`  (topic–term distributions)
//!
//! All samples come from a single chain: topic labels are only meaningful
//! within one chain, so averaging across chains would mix labels.
//! Determinism is with respect to the input as given — same matrix, config
//! and seed reproduce the model bit for bit; invariance under document
//! reordering is *not* claimed (the RNG stream is sequential).

mod gibbs;
mod serialize;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DocTermMatrix, Vocabulary};

pub use gibbs::GibbsState;
pub use serialize::{read_model, write_model};

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("invalid lda config: {0}")]
    InvalidConfig(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document {0} has no tokens")]
    EmptyDocument(usize),
    #[error("{what} {got} out of range (< {bound} required)")]
    IndexOutOfRange {
        what: &'static str,
        got: usize,
        bound: usize,
    },
    #[error("model was fitted with {model} terms but the vocabulary has {vocab}")]
    VocabMismatch { model: usize, vocab: usize },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sampler configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric document–topic prior.
    pub alpha: f64,
    /// Symmetric topic–term prior.
    pub eta: f64,
    /// Sweeps discarded before sampling starts.
    pub burn_in: usize,
    /// Number of post-burn-in states averaged into the estimates.
    pub samples: usize,
    /// Sweeps between collected states.
    pub thin: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// The conventional defaults: `alpha = 50/K`, `eta = 0.01`, 1000
    /// burn-in sweeps, 20 samples spaced 10 sweeps apart.
    pub fn with_defaults(topics: usize, seed: u64) -> Self {
        LdaConfig {
            topics,
            alpha: 50.0 / topics.max(1) as f64,
            eta: 0.01,
            burn_in: 1000,
            samples: 20,
            thin: 10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        if self.topics == 0 {
            return Err(LdaError::InvalidConfig("topics must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(LdaError::InvalidConfig(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            )));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(LdaError::InvalidConfig(format!(
                "eta must be positive and finite, got {}",
                self.eta
            )));
        }
        if self.samples == 0 {
            return Err(LdaError::InvalidConfig("samples must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(LdaError::InvalidConfig("thin must be at least 1".into()));
        }
        Ok(())
    }
}

/// A dense row-major matrix of f64; the container for `θ̂` and `β̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from row vectors; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, String> {
        if data.len() != rows * cols {
            return Err(format!(
                "flat data has {} entries, expected {}x{}",
                data.len(),
                rows,
                cols
            ));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// A fitted topic model: posterior-mean estimates plus the exact recipe
/// (config, seed, vocabulary hash) that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub config: LdaConfig,
    /// SHA-256 of the vocabulary the model indexes into.
    pub vocab_hash: String,
    /// Document–topic proportions, D x K; rows sum to 1.
    pub theta: DenseMatrix,
    /// Topic–term distributions, K x V; rows sum to 1.
    pub beta: DenseMatrix,
    pub sweeps_run: usize,
    pub samples_collected: usize,
}

impl LdaModel {
    pub fn n_docs(&self) -> usize {
        self.theta.rows()
    }

    pub fn n_topics(&self) -> usize {
        self.config.topics
    }

    pub fn vocab_size(&self) -> usize {
        self.beta.cols()
    }
}

/// Fits the model: burn-in, then `samples` states spaced `thin` sweeps
/// apart, averaged into posterior means. `vocab_hash` is stored verbatim
/// so downstream stages can refuse a mismatched vocabulary.
pub fn fit(
    matrix: &DocTermMatrix,
    config: &LdaConfig,
    vocab_hash: &str,
) -> Result<LdaModel, LdaError> {
    config.validate()?;
    if matrix.n_docs() == 0 || matrix.vocab_size == 0 {
        return Err(LdaError::EmptyCorpus);
    }
    for (d, doc) in matrix.docs.iter().enumerate() {
        if doc.tokens.is_empty() {
            return Err(LdaError::EmptyDocument(d));
        }
        if let Some(&t) = doc.tokens.iter().find(|&&t| t as usize >= matrix.vocab_size) {
            return Err(LdaError::IndexOutOfRange {
                what: "term index",
                got: t as usize,
                bound: matrix.vocab_size,
            });
        }
    }

    let k = config.topics;
    let v = matrix.vocab_size;
    let d_count = matrix.n_docs();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = GibbsState::init(matrix, k, &mut rng);

    for _ in 0..config.burn_in {
        state.sweep(config.alpha, config.eta, &mut rng);
    }

    let mut theta = DenseMatrix::zeros(d_count, k);
    let mut beta = DenseMatrix::zeros(k, v);
    for _ in 0..config.samples {
        for _ in 0..config.thin {
            state.sweep(config.alpha, config.eta, &mut rng);
        }
        accumulate(&state, config, &mut theta, &mut beta);
    }

    let scale = 1.0 / config.samples as f64;
    for x in theta.data.iter_mut() {
        *x *= scale;
    }
    for x in beta.data.iter_mut() {
        *x *= scale;
    }

    Ok(LdaModel {
        config: config.clone(),
        vocab_hash: vocab_hash.to_string(),
        theta,
        beta,
        sweeps_run: config.burn_in + config.samples * config.thin,
        samples_collected: config.samples,
    })
}

/// Adds the smoothed proportions of the current state into the running
/// sums.
fn accumulate(state: &GibbsState, config: &LdaConfig, theta: &mut DenseMatrix, beta: &mut DenseMatrix) {
    let k = config.topics;
    let v = state.vocab_size;
    for d in 0..state.n_docs() {
        let denom = state.doc_len(d) as f64 + k as f64 * config.alpha;
        let row = theta.row_mut(d);
        for (kk, slot) in row.iter_mut().enumerate() {
            *slot += (f64::from(state.n_dk[d * k + kk]) + config.alpha) / denom;
        }
    }
    for kk in 0..k {
        let denom = state.n_k[kk] as f64 + v as f64 * config.eta;
        let row = beta.row_mut(kk);
        for (t, slot) in row.iter_mut().enumerate() {
            *slot += (f64::from(state.n_kv[kk * v + t]) + config.eta) / denom;
        }
    }
}

/// The `n` most probable terms of one topic, by descending probability
/// with ascending term index breaking ties.
pub fn top_words(
    model: &LdaModel,
    vocab: &Vocabulary,
    topic: usize,
    n: usize,
) -> Result<Vec<(String, f64)>, LdaError> {
    let k = model.n_topics();
    let v = model.vocab_size();
    if topic >= k {
        return Err(LdaError::IndexOutOfRange {
            what: "topic",
            got: topic,
            bound: k,
        });
    }
    if n == 0 || n > v {
        return Err(LdaError::IndexOutOfRange {
            what: "top-word count",
            got: n,
            bound: v + 1,
        });
    }
    if vocab.len() != v {
        return Err(LdaError::VocabMismatch {
            model: v,
            vocab: vocab.len(),
        });
    }

    let row = model.beta.row(topic);
    let mut order: Vec<usize> = (0..v).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    Ok(order[..n]
        .iter()
        .map(|&t| (vocab.term(t as u32).unwrap().to_string(), row[t]))
        .collect())
}
