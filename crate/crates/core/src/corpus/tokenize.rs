use std::collections::HashSet;
use std::sync::LazyLock;

use super::PreprocessConfig;

static BUILTIN_STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    include_str!("stopwords.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
});

/// The built-in English stopword list.
pub fn builtin_stopwords() -> impl Iterator<Item = &'static str> {
    BUILTIN_STOPWORDS.iter().copied()
}

pub(super) fn is_builtin_stopword(term: &str) -> bool {
    BUILTIN_STOPWORDS.contains(term)
}

/// Splits `text` into normalised tokens.
///
/// A token is a maximal run of Unicode alphabetic characters, lowercased.
/// Anything between runs (digits, punctuation, whitespace, symbols) acts as
/// a separator and is discarded — "3.5%" contributes nothing, "don't"
/// yields "don" and "t". Tokens shorter than the configured minimum length
/// (counted in characters, after lowercasing) and tokens on the stopword or
/// exclusion lists are dropped. No stemming or lemmatisation is applied.
///
/// The operation is idempotent: re-tokenising the space-joined output
/// returns the same token sequence.
pub fn tokenize(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut run = String::new();
    let mut run_chars = 0usize;

    let flush = |run: &mut String, run_chars: &mut usize, tokens: &mut Vec<String>| {
        if *run_chars >= config.min_token_len && config.keeps(run.as_str()) {
            tokens.push(std::mem::take(run));
        } else {
            run.clear();
        }
        *run_chars = 0;
    };

    for ch in text.chars() {
        if ch.is_alphabetic() {
            for lc in ch.to_lowercase() {
                run.push(lc);
                run_chars += 1;
            }
        } else if !run.is_empty() {
            flush(&mut run, &mut run_chars, &mut tokens);
        }
    }
    if !run.is_empty() {
        flush(&mut run, &mut run_chars, &mut tokens);
    }
    tokens
}
