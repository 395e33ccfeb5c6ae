//! Corpus ingestion: tokenisation, vocabulary pruning and the sparse
//! document–term matrix handed to the topic model.
//!
//! Preprocessing is deliberately minimal and fully deterministic: lowercase
//! alphabetic tokens, stopword and exclusion filtering, a document-frequency
//! prune — and nothing else (no stemming), so every matrix cell can be
//! traced back to literal token occurrences.

mod io;
mod tokenize;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use io::{
    read_jsonl, read_jsonl_file, read_matrix, read_vocabulary, read_wordlist, write_jsonl,
    write_matrix, write_vocabulary,
};
pub use tokenize::{builtin_stopwords, tokenize};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(String),
    #[error("every document tokenized to nothing (AllDocumentsEmpty)")]
    AllDocumentsEmpty,
    #[error(
        "vocabulary is empty after pruning (min_df={min_df}, max_df={max_df}); \
         no term survived"
    )]
    EmptyVocabulary { min_df: usize, max_df: f64 },
    #[error("document id {0:?} is empty or contains whitespace")]
    InvalidDocumentId(String),
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything that shapes tokenisation and vocabulary pruning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Minimum token length in characters, applied after lowercasing.
    pub min_token_len: usize,
    /// Whether the built-in English stopword list is active.
    pub builtin_stopwords: bool,
    /// Additional stopwords (already lowercased).
    pub extra_stopwords: HashSet<String>,
    /// Domain-specific exclusion terms (already lowercased).
    pub exclusions: HashSet<String>,
    /// Keep a term only if it occurs in at least this many documents.
    pub min_df: usize,
    /// Keep a term only if it occurs in at most this fraction of documents.
    pub max_df: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_token_len: 2,
            builtin_stopwords: true,
            extra_stopwords: HashSet::new(),
            exclusions: HashSet::new(),
            min_df: 5,
            max_df: 0.5,
        }
    }
}

impl PreprocessConfig {
    /// A profile that changes nothing: no stopwords, no length filter, no
    /// pruning. Used for synthetic corpora whose tokens are already clean
    /// (generated term strings may collide with English stopwords — "was"
    /// is a valid base-26 term — so the default profile must not be used
    /// for round-trip checks).
    pub fn passthrough() -> Self {
        PreprocessConfig {
            min_token_len: 1,
            builtin_stopwords: false,
            extra_stopwords: HashSet::new(),
            exclusions: HashSet::new(),
            min_df: 1,
            max_df: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_token_len == 0 {
            return Err(CorpusError::InvalidConfig(
                "min_token_len must be at least 1".into(),
            ));
        }
        if self.min_df == 0 {
            return Err(CorpusError::InvalidConfig("min_df must be at least 1".into()));
        }
        if !(self.max_df > 0.0 && self.max_df <= 1.0) {
            return Err(CorpusError::InvalidConfig(format!(
                "max_df must lie in (0, 1], got {}",
                self.max_df
            )));
        }
        Ok(())
    }

    fn keeps(&self, token: &str) -> bool {
        !(self.builtin_stopwords && tokenize::is_builtin_stopword(token))
            && !self.extra_stopwords.contains(token)
            && !self.exclusions.contains(token)
    }
}

/// A document as read from disk, before any processing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    /// Integer time index (a year in the intended use).
    #[serde(rename = "year")]
    pub period: i32,
    pub text: String,
}

/// A tokenised document: term indices into the corpus vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub period: i32,
    /// Term indices in text order (or in ascending term order after a
    /// matrix-file round trip; the topic model treats documents as bags,
    /// so the distinction never affects results).
    pub tokens: Vec<u32>,
}

impl Document {
    /// Sparse counts, sorted by ascending term index.
    pub fn counts(&self) -> Vec<(u32, u32)> {
        let mut map: HashMap<u32, u32> = HashMap::new();
        for &t in &self.tokens {
            *map.entry(t).or_insert(0) += 1;
        }
        let mut counts: Vec<(u32, u32)> = map.into_iter().collect();
        counts.sort_unstable();
        counts
    }
}

/// The pruned vocabulary, ordered by descending corpus frequency with
/// lexicographic tie-breaks; term index = position.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_terms(terms: Vec<String>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(CorpusError::InvalidConfig(format!(
                    "duplicate vocabulary term {t:?}"
                )));
            }
        }
        Ok(Vocabulary { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, idx: u32) -> Option<&str> {
        self.terms.get(idx as usize).map(String::as_str)
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// SHA-256 over the newline-joined term list; ties a saved model to the
    /// exact vocabulary it was fitted against.
    pub fn sha256_hex(&self) -> String {
        let mut hasher = Sha256::new();
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                hasher.update(b"\n");
            }
            hasher.update(t.as_bytes());
        }
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

/// Sparse document–term matrix plus per-document metadata.
#[derive(Debug, Clone)]
pub struct DocTermMatrix {
    pub vocab_size: usize,
    pub docs: Vec<Document>,
}

impl DocTermMatrix {
    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(|d| d.tokens.len()).sum()
    }

    /// Per-document period, aligned with row order.
    pub fn periods(&self) -> Vec<i32> {
        self.docs.iter().map(|d| d.period).collect()
    }
}

/// Result of [`build_corpus`].
#[derive(Debug)]
pub struct CorpusBuild {
    pub vocabulary: Vocabulary,
    pub matrix: DocTermMatrix,
    /// Ids of documents dropped because nothing survived tokenisation and
    /// pruning, in input order.
    pub dropped: Vec<String>,
}

/// Tokenises every document, prunes the vocabulary by document frequency
/// and assembles the document–term matrix.
///
/// Document frequency is computed over documents with at least one token;
/// a term survives if `min_df <= df` and `df <= max_df * D`. Surviving
/// terms are ordered by descending total corpus frequency, ties broken
/// lexicographically. Documents left without any in-vocabulary token are
/// dropped from the matrix and reported by id.
pub fn build_corpus(
    raw: &[RawDocument],
    config: &PreprocessConfig,
) -> Result<CorpusBuild, CorpusError> {
    config.validate()?;

    let tokenized: Vec<Vec<String>> = raw.iter().map(|d| tokenize(&d.text, config)).collect();
    let n_nonempty = tokenized.iter().filter(|t| !t.is_empty()).count();
    if n_nonempty == 0 {
        return Err(CorpusError::AllDocumentsEmpty);
    }

    let mut df: HashMap<&str, usize> = HashMap::new();
    let mut tf: HashMap<&str, u64> = HashMap::new();
    for tokens in &tokenized {
        let mut seen: HashSet<&str> = HashSet::new();
        for t in tokens {
            *tf.entry(t).or_insert(0) += 1;
            if seen.insert(t) {
                *df.entry(t).or_insert(0) += 1;
            }
        }
    }

    let df_ceiling = config.max_df * n_nonempty as f64;
    let mut kept: Vec<(&str, u64)> = df
        .iter()
        .filter(|&(_, &d)| d >= config.min_df && d as f64 <= df_ceiling)
        .map(|(&t, _)| (t, tf[t]))
        .collect();
    if kept.is_empty() {
        return Err(CorpusError::EmptyVocabulary {
            min_df: config.min_df,
            max_df: config.max_df,
        });
    }
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let vocabulary = Vocabulary::from_terms(kept.iter().map(|(t, _)| t.to_string()).collect())?;

    let mut docs = Vec::new();
    let mut dropped = Vec::new();
    for (raw_doc, tokens) in raw.iter().zip(&tokenized) {
        let ids: Vec<u32> = tokens
            .iter()
            .filter_map(|t| vocabulary.index_of(t))
            .collect();
        if ids.is_empty() {
            dropped.push(raw_doc.id.clone());
        } else {
            docs.push(Document {
                id: raw_doc.id.clone(),
                period: raw_doc.period,
                tokens: ids,
            });
        }
    }
    debug_assert!(!docs.is_empty());

    let matrix = DocTermMatrix {
        vocab_size: vocabulary.len(),
        docs,
    };
    Ok(CorpusBuild {
        vocabulary,
        matrix,
        dropped,
    })
}
