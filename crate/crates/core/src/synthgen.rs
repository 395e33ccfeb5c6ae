//! Synthetic corpora with known topics and planted prevalence trends.
//!
//! Documents are drawn from the generative model itself (topic–term rows
//! from a symmetric Dirichlet or given explicitly, per-document mixtures
//! from a per-period Dirichlet profile), so recovery and trend-detection
//! claims can be tested against ground truth.
//!
//! Term strings are `"w"` followed by fixed-width base-26 letters
//! (`waa`, `wab`, …), which pass the tokenizer's alphabetic rule
//! untouched. Note some of them collide with English stopwords ("was" is
//! a valid term at width 2), so synthetic corpora should be rebuilt with
//! [`crate::corpus::PreprocessConfig::passthrough`], never the default
//! profile.
//!
//! RNG consumption order (one sequential ChaCha8 stream from `seed`):
//! topic–term rows first (when sampled), then per document: its mixture,
//! its length (when a range is configured), then token pairs (topic, term).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::RawDocument;
use crate::lda::DenseMatrix;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("target share {0} is infeasible; shares must lie strictly inside (0, 1)")]
    InfeasibleShare(f64),
}

/// Number of tokens per document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DocLength {
    Fixed(usize),
    /// Inclusive bounds, drawn uniformly.
    Range(usize, usize),
}

/// Topic–term distributions: sampled or given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BetaSpec {
    /// Each topic row drawn from a symmetric Dirichlet(eta) over the
    /// vocabulary.
    Dirichlet { eta: f64 },
    /// Explicit K x V rows (non-negative, positive row sums; normalised
    /// internally).
    Explicit(Vec<Vec<f64>>),
}

/// Per-period document–topic Dirichlet parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AlphaProfile {
    /// One row of K parameters used for every period.
    Constant(Vec<f64>),
    /// One row per period (T x K).
    PerPeriod(Vec<Vec<f64>>),
}

impl AlphaProfile {
    fn resolved(&self, periods: usize) -> Vec<Vec<f64>> {
        match self {
            AlphaProfile::Constant(row) => vec![row.clone(); periods],
            AlphaProfile::PerPeriod(rows) => rows.clone(),
        }
    }
}

/// Shape of an injected prevalence trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendShape {
    /// Straight line from the start share to the end share.
    Linear,
    /// Tent: start share at both ends, peaking at the `end_share`
    /// argument mid-series.
    Hump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub topics: usize,
    pub vocab_size: usize,
    pub docs_per_period: usize,
    pub periods: usize,
    /// Period value of the first period; later periods count up by one.
    pub start_period: i32,
    pub doc_length: DocLength,
    pub alpha: AlphaProfile,
    pub beta: BetaSpec,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.topics == 0 {
            return bad("topics must be at least 1".into());
        }
        if self.vocab_size < 2 {
            return bad("vocab_size must be at least 2".into());
        }
        if self.docs_per_period == 0 || self.periods == 0 {
            return bad("docs_per_period and periods must be at least 1".into());
        }
        match self.doc_length {
            DocLength::Fixed(0) => return bad("doc length must be positive".into()),
            DocLength::Range(lo, hi) if lo == 0 || lo > hi => {
                return bad(format!("bad doc length range [{lo}, {hi}]"));
            }
            _ => {}
        }
        let rows = self.alpha.resolved(self.periods);
        if rows.len() != self.periods {
            return bad(format!(
                "alpha profile has {} rows, expected {}",
                rows.len(),
                self.periods
            ));
        }
        for row in &rows {
            if row.len() != self.topics {
                return bad(format!(
                    "alpha row has {} entries, expected {}",
                    row.len(),
                    self.topics
                ));
            }
            if row.iter().any(|&a| !(a.is_finite() && a > 0.0)) {
                return bad("alpha parameters must be positive and finite".into());
            }
        }
        match &self.beta {
            BetaSpec::Dirichlet { eta } => {
                if !(eta.is_finite() && *eta > 0.0) {
                    return bad(format!("eta must be positive and finite, got {eta}"));
                }
            }
            BetaSpec::Explicit(beta) => {
                if beta.len() != self.topics {
                    return bad(format!(
                        "explicit beta has {} rows, expected {}",
                        beta.len(),
                        self.topics
                    ));
                }
                for row in beta {
                    if row.len() != self.vocab_size {
                        return bad(format!(
                            "explicit beta row has {} entries, expected {}",
                            row.len(),
                            self.vocab_size
                        ));
                    }
                    if row.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
                        return bad("explicit beta entries must be non-negative".into());
                    }
                    if row.iter().sum::<f64>() <= 0.0 {
                        return bad("explicit beta row sums must be positive".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-document ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTruth {
    pub id: String,
    pub period: i32,
    pub theta: Vec<f64>,
}

/// Everything the generator knows that a fitted model has to recover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    /// K x V topic–term rows actually used.
    pub beta: Vec<Vec<f64>>,
    pub docs: Vec<DocTruth>,
    /// Resolved T x K Dirichlet parameters.
    pub alpha_profile: Vec<Vec<f64>>,
    /// T x K expected prevalence rows: alpha normalised per period.
    pub expected_prevalence: Vec<Vec<f64>>,
}

impl SynthTruth {
    pub fn beta_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_rows(&self.beta)
    }
}

/// The vocabulary the generator emits: `"w"` + fixed-width base-26
/// letters, width chosen as the smallest that covers `vocab_size`.
pub fn term_strings(vocab_size: usize) -> Vec<String> {
    let mut width = 1usize;
    let mut span = 26usize;
    while span < vocab_size {
        width += 1;
        span *= 26;
    }
    (0..vocab_size)
        .map(|i| {
            let mut letters = vec![b'a'; width];
            let mut rest = i;
            for slot in letters.iter_mut().rev() {
                *slot = b'a' + (rest % 26) as u8;
                rest /= 26;
            }
            format!("w{}", std::str::from_utf8(&letters).unwrap())
        })
        .collect()
}

/// Draws `docs_per_period * periods` documents from the generative model.
/// Fully deterministic in `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<(Vec<RawDocument>, SynthTruth), SynthError> {
    spec.validate()?;
    let k = spec.topics;
    let v = spec.vocab_size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let beta: Vec<Vec<f64>> = match &spec.beta {
        BetaSpec::Dirichlet { eta } => {
            let alphas = vec![*eta; v];
            (0..k).map(|_| sample_dirichlet(&alphas, &mut rng)).collect()
        }
        BetaSpec::Explicit(rows) => rows
            .iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                row.iter().map(|p| p / total).collect()
            })
            .collect(),
    };

    let alpha_profile = spec.alpha.resolved(spec.periods);
    let expected_prevalence: Vec<Vec<f64>> = alpha_profile
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            row.iter().map(|a| a / total).collect()
        })
        .collect();

    let terms = term_strings(v);
    let mut docs = Vec::with_capacity(spec.periods * spec.docs_per_period);
    let mut doc_truths = Vec::with_capacity(docs.capacity());

    for (t, alpha_row) in alpha_profile.iter().enumerate() {
        let period = spec.start_period + t as i32;
        for i in 0..spec.docs_per_period {
            let theta = sample_dirichlet(alpha_row, &mut rng);
            let length = match spec.doc_length {
                DocLength::Fixed(n) => n,
                DocLength::Range(lo, hi) => rng.random_range(lo..=hi),
            };
            let mut words = Vec::with_capacity(length);
            for _ in 0..length {
                let z = categorical(&theta, &mut rng);
                let w = categorical(&beta[z], &mut rng);
                words.push(terms[w].as_str());
            }
            let id = format!("t{t:04}d{i:04}");
            doc_truths.push(DocTruth {
                id: id.clone(),
                period,
                theta: theta.clone(),
            });
            docs.push(RawDocument {
                id,
                period,
                text: words.join(" "),
            });
        }
    }

    Ok((
        docs,
        SynthTruth {
            beta,
            docs: doc_truths,
            alpha_profile,
            expected_prevalence,
        },
    ))
}

/// Rescales the alpha profile so the chosen topic's expected prevalence
/// follows the requested trajectory, holding every period's total
/// concentration fixed (the remaining topics shrink proportionally).
///
/// `shape = Linear` runs from `start_share` at the first period to
/// `end_share` at the last; `shape = Hump` starts and ends at
/// `start_share` and peaks at `end_share` mid-series. Equal start and end
/// shares produce a flat trajectory.
pub fn inject_trend(
    spec: &SynthSpec,
    topic: usize,
    start_share: f64,
    end_share: f64,
    shape: TrendShape,
) -> Result<SynthSpec, SynthError> {
    spec.validate()?;
    if topic >= spec.topics {
        return Err(SynthError::InvalidSpec(format!(
            "trend topic {topic} out of range for {} topics",
            spec.topics
        )));
    }
    if spec.topics < 2 {
        return Err(SynthError::InvalidSpec(
            "trend injection needs at least 2 topics".into(),
        ));
    }
    for share in [start_share, end_share] {
        if !(share.is_finite() && share > 0.0 && share < 1.0) {
            return Err(SynthError::InfeasibleShare(share));
        }
    }

    let t_count = spec.periods;
    let base = spec.alpha.resolved(t_count);
    let mut rows = Vec::with_capacity(t_count);
    for (t, base_row) in base.iter().enumerate() {
        let u = if t_count > 1 {
            t as f64 / (t_count - 1) as f64
        } else {
            0.0
        };
        let share = match shape {
            TrendShape::Linear => start_share + u * (end_share - start_share),
            TrendShape::Hump => {
                start_share + (end_share - start_share) * (1.0 - (2.0 * u - 1.0).abs())
            }
        };
        let total: f64 = base_row.iter().sum();
        let rest: f64 = total - base_row[topic];
        let mut row = base_row.clone();
        row[topic] = share * total;
        let rescale = (1.0 - share) * total / rest;
        for (j, slot) in row.iter_mut().enumerate() {
            if j != topic {
                *slot = base_row[j] * rescale;
            }
        }
        rows.push(row);
    }

    Ok(SynthSpec {
        alpha: AlphaProfile::PerPeriod(rows),
        ..spec.clone()
    })
}

/// Writes the ground truth as JSON.
pub fn write_truth<W: std::io::Write>(writer: W, truth: &SynthTruth) -> std::io::Result<()> {
    serde_json::to_writer(writer, truth)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

/// Reads ground truth written by [`write_truth`].
pub fn read_truth<R: std::io::Read>(reader: R) -> Result<SynthTruth, String> {
    serde_json::from_reader(reader).map_err(|e| e.to_string())
}

/// Inverse of [`term_strings`]: decodes `"w"` + base-26 letters back to
/// the term's index in the generated vocabulary.
pub fn decode_term(term: &str) -> Option<usize> {
    let letters = term.strip_prefix('w')?;
    if letters.is_empty() {
        return None;
    }
    let mut idx = 0usize;
    for c in letters.chars() {
        if !c.is_ascii_lowercase() {
            return None;
        }
        idx = idx.checked_mul(26)?.checked_add((c as u8 - b'a') as usize)?;
    }
    Some(idx)
}

/// Re-indexes the true topic–term rows onto a built vocabulary's column
/// order, so they can be compared against a fitted model's rows.
///
/// Terms the generator could emit but that never appeared in the corpus
/// are simply absent from the built vocabulary; their (tiny) true mass is
/// dropped, not redistributed, which leaves cosine comparisons unaffected.
pub fn truth_beta_for_vocab(
    truth: &SynthTruth,
    vocab: &crate::corpus::Vocabulary,
) -> Result<DenseMatrix, SynthError> {
    let v_true = truth.beta.first().map_or(0, Vec::len);
    let rows: Vec<Vec<f64>> = truth
        .beta
        .iter()
        .map(|row| {
            vocab
                .terms()
                .iter()
                .map(|term| {
                    let idx = decode_term(term).filter(|&i| i < v_true).ok_or_else(|| {
                        SynthError::InvalidSpec(format!(
                            "vocabulary term {term:?} was not produced by this generator"
                        ))
                    })?;
                    Ok(row[idx])
                })
                .collect::<Result<Vec<f64>, SynthError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(DenseMatrix::from_rows(&rows))
}

/// One estimated-to-true topic pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopicMatch {
    pub estimated: usize,
    pub truth: usize,
    pub cosine: f64,
}

/// Greedy max-cosine matching between estimated and true topic–term rows:
/// repeatedly pairs the globally most similar unmatched rows. Returns one
/// match per estimated row (requires equal row counts), sorted by
/// estimated index.
pub fn greedy_cosine_match(estimated: &DenseMatrix, truth: &DenseMatrix) -> Vec<TopicMatch> {
    assert_eq!(estimated.cols(), truth.cols(), "vocabulary size mismatch");
    assert_eq!(estimated.rows(), truth.rows(), "topic count mismatch");
    let k = estimated.rows();

    let mut sims = vec![vec![0.0f64; k]; k];
    for (e, row) in sims.iter_mut().enumerate() {
        for (t, slot) in row.iter_mut().enumerate() {
            *slot = cosine(estimated.row(e), truth.row(t));
        }
    }

    let mut est_free = vec![true; k];
    let mut truth_free = vec![true; k];
    let mut matches = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, usize, f64)> = None;
        for e in 0..k {
            if !est_free[e] {
                continue;
            }
            for t in 0..k {
                if !truth_free[t] {
                    continue;
                }
                if best.is_none_or(|(_, _, s)| sims[e][t] > s) {
                    best = Some((e, t, sims[e][t]));
                }
            }
        }
        let (e, t, s) = best.unwrap();
        est_free[e] = false;
        truth_free[t] = false;
        matches.push(TopicMatch {
            estimated: e,
            truth: t,
            cosine: s,
        });
    }
    matches.sort_by_key(|m| m.estimated);
    matches
}

/// Size of the intersection of the two rows' top-`n` index sets
/// (descending value, ascending index on ties).
pub fn top_n_overlap(a: &[f64], b: &[f64], n: usize) -> usize {
    let top = |row: &[f64]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&x, &y| row[y].total_cmp(&row[x]).then(x.cmp(&y)));
        idx.truncate(n);
        idx
    };
    let ta = top(a);
    let tb: std::collections::HashSet<usize> = top(b).into_iter().collect();
    ta.iter().filter(|i| tb.contains(i)).count()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

fn sample_dirichlet<R: Rng>(alphas: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut draws: Vec<f64> = alphas
            .iter()
            .map(|&a| Gamma::new(a, 1.0).unwrap().sample(rng))
            .collect();
        let total: f64 = draws.iter().sum();
        // Total underflow is essentially impossible for the parameter
        // ranges accepted by validate(); redraw if it ever happens.
        if total > 0.0 && total.is_finite() {
            for x in &mut draws {
                *x /= total;
            }
            return draws;
        }
    }
}

fn categorical<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}
