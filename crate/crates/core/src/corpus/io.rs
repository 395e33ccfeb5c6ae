//! On-disk formats: JSON-Lines corpora, the sparse matrix text format,
//! vocabulary files and plain word lists.
//!
//! Matrix format: a header line `V D`, then one line per document of the
//! form `id period nnz t:c t:c ...` with term indices strictly ascending.
//! All formats are plain UTF-8 text written deterministically.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CorpusError, DocTermMatrix, Document, RawDocument, Vocabulary};

fn validate_id(id: &str) -> Result<(), CorpusError> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(CorpusError::InvalidDocumentId(id.to_string()));
    }
    Ok(())
}

/// Reads a JSON-Lines corpus: one object per line with fields `id`, `year`
/// and `text`. Blank lines are ignored; any malformed line fails with its
/// 1-based line number.
pub fn read_jsonl<R: Read>(reader: R) -> Result<Vec<RawDocument>, CorpusError> {
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
                line: lineno,
                message: e.to_string(),
            })?;
        validate_id(&doc.id).map_err(|_| CorpusError::MalformedLine {
            line: lineno,
            message: format!("document id {:?} is empty or contains whitespace", doc.id),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn read_jsonl_file(path: &Path) -> Result<Vec<RawDocument>, CorpusError> {
    read_jsonl(File::open(path)?)
}

/// Writes a corpus in the JSON-Lines format accepted by [`read_jsonl`].
pub fn write_jsonl<W: Write>(writer: W, docs: &[RawDocument]) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(writer);
    for doc in docs {
        validate_id(&doc.id)?;
        // RawDocument serializes `period` under the key "year".
        let line = serde_json::to_string(doc).expect("raw document serializes");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the sparse matrix text format.
pub fn write_matrix<W: Write>(writer: W, matrix: &DocTermMatrix) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{} {}", matrix.vocab_size, matrix.docs.len())?;
    for doc in &matrix.docs {
        validate_id(&doc.id)?;
        let counts = doc.counts();
        write!(w, "{} {} {}", doc.id, doc.period, counts.len())?;
        for (t, c) in counts {
            write!(w, " {t}:{c}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the sparse matrix text format back into a [`DocTermMatrix`].
///
/// Token sequences are reconstructed in ascending term order; the model
/// treats documents as bags of words, so this is lossless for every
/// downstream computation.
pub fn read_matrix<R: Read>(reader: R) -> Result<DocTermMatrix, CorpusError> {
    let mut lines = BufReader::new(reader).lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| CorpusError::MalformedLine {
        line: 1,
        message: "missing header line".into(),
    })?;
    let header = header?;
    let mut parts = header.split_whitespace();
    let vocab_size: usize = parse_field(parts.next(), 1, "vocabulary size")?;
    let n_docs: usize = parse_field(parts.next(), 1, "document count")?;
    if parts.next().is_some() {
        return Err(CorpusError::MalformedLine {
            line: 1,
            message: "header must be exactly `V D`".into(),
        });
    }

    let mut docs = Vec::with_capacity(n_docs);
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let id = parts
            .next()
            .ok_or_else(|| malformed(lineno, "missing document id"))?
            .to_string();
        let period: i32 = parse_field(parts.next(), lineno, "period")?;
        let nnz: usize = parse_field(parts.next(), lineno, "entry count")?;
        let mut tokens = Vec::new();
        let mut prev_term: Option<u32> = None;
        let mut seen = 0usize;
        for pair in parts {
            let (t, c) = pair
                .split_once(':')
                .ok_or_else(|| malformed(lineno, "expected term:count pair"))?;
            let term: u32 = t
                .parse()
                .map_err(|_| malformed(lineno, "term index is not an integer"))?;
            let count: u32 = c
                .parse()
                .map_err(|_| malformed(lineno, "count is not an integer"))?;
            if term as usize >= vocab_size {
                return Err(malformed(lineno, "term index out of range"));
            }
            if count == 0 {
                return Err(malformed(lineno, "zero count entry"));
            }
            if prev_term.is_some_and(|p| term <= p) {
                return Err(malformed(lineno, "term indices must be strictly ascending"));
            }
            prev_term = Some(term);
            tokens.extend(std::iter::repeat_n(term, count as usize));
            seen += 1;
        }
        if seen != nnz {
            return Err(malformed(
                lineno,
                "entry count does not match number of pairs",
            ));
        }
        if tokens.is_empty() {
            return Err(malformed(lineno, "document row has no tokens"));
        }
        docs.push(Document { id, period, tokens });
    }

    if docs.len() != n_docs {
        return Err(CorpusError::MalformedLine {
            line: 1,
            message: format!("header promises {n_docs} documents, found {}", docs.len()),
        });
    }
    Ok(DocTermMatrix { vocab_size, docs })
}

fn malformed(line: usize, message: &str) -> CorpusError {
    CorpusError::MalformedLine {
        line,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, CorpusError> {
    field
        .ok_or_else(|| malformed(line, &format!("missing {what}")))?
        .parse()
        .map_err(|_| malformed(line, &format!("{what} is not a valid integer")))
}

/// Writes the vocabulary, one term per line in index order.
pub fn write_vocabulary<W: Write>(writer: W, vocab: &Vocabulary) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(writer);
    for term in vocab.terms() {
        writeln!(w, "{term}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a vocabulary file written by [`write_vocabulary`].
pub fn read_vocabulary<R: Read>(reader: R) -> Result<Vocabulary, CorpusError> {
    let mut terms = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let term = line.trim();
        if !term.is_empty() {
            terms.push(term.to_string());
        }
    }
    Vocabulary::from_terms(terms)
}

/// Reads a stopword or exclusion list: one term per line, `#` lines are
/// comments, terms are lowercased.
pub fn read_wordlist<R: Read>(reader: R) -> Result<HashSet<String>, CorpusError> {
    let mut words = HashSet::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let term = line.trim();
        if term.is_empty() || term.starts_with('#') {
            continue;
        }
        words.insert(term.to_lowercase());
    }
    Ok(words)
}
