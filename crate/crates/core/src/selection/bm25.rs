use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::text::word_tokens;

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

/// Okapi BM25 statistics over a document collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Stats {
    pub doc_count: usize,
    pub avg_doc_len: f64,
    /// Per-term document frequency.
    pub doc_freq: BTreeMap<String, usize>,
    /// Per-document term counts and lengths.
    pub doc_terms: Vec<BTreeMap<String, usize>>,
    pub doc_lens: Vec<usize>,
}

impl Bm25Stats {
    pub fn build<'a>(docs: impl Iterator<Item = &'a str>) -> Self {
        let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
        let mut doc_terms = Vec::new();
        let mut doc_lens = Vec::new();
        for doc in docs {
            let tokens = word_tokens(doc);
            doc_lens.push(tokens.len());
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for token in tokens {
                *counts.entry(token).or_insert(0) += 1;
            }
            for term in counts.keys() {
                *doc_freq.entry(term.clone()).or_insert(0) += 1;
            }
            doc_terms.push(counts);
        }
        let doc_count = doc_lens.len();
        let avg_doc_len = if doc_count == 0 {
            0.0
        } else {
            doc_lens.iter().sum::<usize>() as f64 / doc_count as f64
        };
        Bm25Stats {
            doc_count,
            avg_doc_len,
            doc_freq,
            doc_terms,
            doc_lens,
        }
    }

    /// Okapi score of document `doc` for `query`, with the usual
    /// non-negative idf variant `ln(1 + (N - df + 0.5) / (df + 0.5))` and
    /// k1/b fixed at 1.2/0.75. Query terms are deduplicated in first-seen
    /// order; a document sharing no term with the query scores exactly 0.
    pub fn score(&self, query: &str, doc: usize) -> f64 {
        let mut seen = std::collections::BTreeSet::new();
        let mut score = 0.0;
        let n = self.doc_count as f64;
        let len_ratio = self.doc_lens[doc] as f64 / self.avg_doc_len.max(f64::MIN_POSITIVE);
        for term in word_tokens(query) {
            if !seen.insert(term.clone()) {
                continue;
            }
            let tf = *self.doc_terms[doc].get(&term).unwrap_or(&0) as f64;
            if tf == 0.0 {
                continue;
            }
            let df = *self.doc_freq.get(&term).unwrap_or(&0) as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let sat = tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * len_ratio));
            score += idf * sat;
        }
        score
    }
}
