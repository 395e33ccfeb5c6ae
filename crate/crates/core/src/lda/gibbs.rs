use rand::Rng;

use crate::corpus::DocTermMatrix;

/// Mutable state of the collapsed Gibbs sampler: one topic assignment per
/// token plus the three count tables the conditional needs.
///
/// Token order within a document is the ascending-term-index expansion of
/// the document's counts, so a matrix loaded from disk and one built
/// in-process walk tokens identically and produce identical chains.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub n_topics: usize,
    pub vocab_size: usize,
    /// Term index of every token, per document, ascending within the doc.
    pub doc_tokens: Vec<Vec<u32>>,
    /// Current topic assignment of every token, aligned with `doc_tokens`.
    pub z: Vec<Vec<u32>>,
    /// Document–topic counts, row-major D x K.
    pub n_dk: Vec<u32>,
    /// Topic–term counts, row-major K x V.
    pub n_kv: Vec<u32>,
    /// Tokens per topic, length K.
    pub n_k: Vec<u64>,
}

impl GibbsState {
    /// Assigns every token a uniformly random topic and builds the count
    /// tables. Consumes exactly one RNG draw per token.
    pub fn init<R: Rng>(matrix: &DocTermMatrix, n_topics: usize, rng: &mut R) -> Self {
        let vocab_size = matrix.vocab_size;
        let n_docs = matrix.n_docs();
        let mut state = GibbsState {
            n_topics,
            vocab_size,
            doc_tokens: Vec::with_capacity(n_docs),
            z: Vec::with_capacity(n_docs),
            n_dk: vec![0; n_docs * n_topics],
            n_kv: vec![0; n_topics * vocab_size],
            n_k: vec![0; n_topics],
        };
        for (d, doc) in matrix.docs.iter().enumerate() {
            let mut tokens = Vec::with_capacity(doc.tokens.len());
            for (term, count) in doc.counts() {
                tokens.extend(std::iter::repeat_n(term, count as usize));
            }
            let mut zs = Vec::with_capacity(tokens.len());
            for &term in &tokens {
                let k = rng.random_range(0..n_topics);
                state.n_dk[d * n_topics + k] += 1;
                state.n_kv[k * vocab_size + term as usize] += 1;
                state.n_k[k] += 1;
                zs.push(k as u32);
            }
            state.doc_tokens.push(tokens);
            state.z.push(zs);
        }
        state
    }

    /// One full sweep: every token of every document is resampled from its
    /// collapsed conditional
    /// `p(z=k) ∝ (n_dk + alpha) (n_kv + eta) / (n_k + V eta)`
    /// with the token itself removed from the counts, in deterministic
    /// (document, token) order. One RNG draw per token.
    pub fn sweep<R: Rng>(&mut self, alpha: f64, eta: f64, rng: &mut R) {
        let k_count = self.n_topics;
        let v = self.vocab_size;
        let v_eta = v as f64 * eta;
        let mut weights = vec![0.0f64; k_count];

        for d in 0..self.doc_tokens.len() {
            let dk_base = d * k_count;
            for i in 0..self.doc_tokens[d].len() {
                let term = self.doc_tokens[d][i] as usize;
                let old = self.z[d][i] as usize;

                self.n_dk[dk_base + old] -= 1;
                self.n_kv[old * v + term] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for (k, w) in weights.iter_mut().enumerate() {
                    *w = (f64::from(self.n_dk[dk_base + k]) + alpha)
                        * (f64::from(self.n_kv[k * v + term]) + eta)
                        / (self.n_k[k] as f64 + v_eta);
                    total += *w;
                }

                let mut u = rng.random::<f64>() * total;
                let mut next = k_count - 1;
                for (k, &w) in weights.iter().enumerate() {
                    if u < w {
                        next = k;
                        break;
                    }
                    u -= w;
                }

                self.n_dk[dk_base + next] += 1;
                self.n_kv[next * v + term] += 1;
                self.n_k[next] += 1;
                self.z[d][i] = next as u32;
            }
        }
    }

    pub fn n_docs(&self) -> usize {
        self.doc_tokens.len()
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.doc_tokens[d].len()
    }

    /// Verifies count-table conservation; used by tests and the pipeline's
    /// internal sanity check.
    pub fn counts_consistent(&self) -> bool {
        let k_count = self.n_topics;
        let v = self.vocab_size;
        let total_tokens: usize = self.doc_tokens.iter().map(Vec::len).sum();

        for (d, tokens) in self.doc_tokens.iter().enumerate() {
            let row_sum: u64 = (0..k_count).map(|k| u64::from(self.n_dk[d * k_count + k])).sum();
            if row_sum != tokens.len() as u64 {
                return false;
            }
        }
        for k in 0..k_count {
            let row_sum: u64 = (0..v).map(|t| u64::from(self.n_kv[k * v + t])).sum();
            if row_sum != self.n_k[k] {
                return false;
            }
        }
        self.n_k.iter().sum::<u64>() == total_tokens as u64
    }
}
