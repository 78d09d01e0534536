//! Character n-gram TF-IDF vectorization of canonical names.
//!
//! Tokens are contiguous character n-grams of lengths `1..=max_n` over the
//! full canonical string, markers included — boundary patterns like `F}` or
//! `{PR` are features in their own right. For a token `t` in document `d`:
//!
//! ```text
//! IDF(t)    = ln((1 + n) / (1 + DF(t))) + 1
//! TF(t, d)  = N_{t,d} / N_d
//! ```
//!
//! where `N_d` is the total count of extracted token positions of all
//! lengths in `d` (a single pooled denominator, counting out-of-vocabulary
//! positions too). Document vectors are L2-normalized, so the pooled
//! denominator cancels; it is kept for fidelity to the formulas above.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted n-gram vocabulary with document frequencies and IDF weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub max_n: usize,
    /// Tokens in column order; `token_index` is its inverse.
    pub tokens: Vec<String>,
    #[serde(skip)]
    pub token_index: HashMap<String, u32>,
    pub df: Vec<u32>,
    pub n_docs: u64,
    #[serde(skip)]
    pub idf: Vec<f64>,
}

impl FeatureSpace {
    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    /// Rebuilds `token_index` and `idf` from the serialized fields.
    pub fn rebuild(&mut self) {
        self.token_index =
            self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        self.idf = self.df.iter().map(|&df| idf_value(self.n_docs, df)).collect();
    }
}

fn idf_value(n_docs: u64, df: u32) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Sparse document vector: `(column, value)` entries sorted by column, no
/// duplicates. Non-zero vectors are L2-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, v)| dense[c as usize] * v).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

fn ngram_positions(doc: &str, max_n: usize) -> impl Iterator<Item = &str> {
    let bytes_len = doc.len();
    (1..=max_n).flat_map(move |n| {
        (0..bytes_len.saturating_sub(n - 1)).map(move |start| &doc[start..start + n])
    })
}

/// Builds the vocabulary over `corpus`, assigning column ids in first
/// occurrence order (documents scanned in order, lengths 1..max_n, left to
/// right).
pub fn fit_vocab<S: AsRef<str>>(corpus: &[S], max_n: usize) -> Result<FeatureSpace> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if max_n == 0 || max_n > 12 {
        return Err(Error::Config(format!("max_n must be in 1..=12, got {max_n}")));
    }

    let mut token_index: HashMap<String, u32> = HashMap::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut df: Vec<u32> = Vec::new();
    let mut seen_in_doc: Vec<u64> = Vec::new(); // doc id of last df increment per column
    for (doc_id, doc) in corpus.iter().enumerate() {
        for gram in ngram_positions(doc.as_ref(), max_n) {
            let col = match token_index.get(gram) {
                Some(&c) => c,
                None => {
                    let c = tokens.len() as u32;
                    token_index.insert(gram.to_string(), c);
                    tokens.push(gram.to_string());
                    df.push(0);
                    seen_in_doc.push(u64::MAX);
                    c
                }
            };
            if seen_in_doc[col as usize] != doc_id as u64 {
                seen_in_doc[col as usize] = doc_id as u64;
                df[col as usize] += 1;
            }
        }
    }

    let n_docs = corpus.len() as u64;
    let idf = df.iter().map(|&d| idf_value(n_docs, d)).collect();
    Ok(FeatureSpace { max_n, tokens, token_index, df, n_docs, idf })
}

/// TF-IDF vector of one document against a fitted space. Out-of-vocabulary
/// tokens are skipped; a document with no in-vocabulary token yields the
/// zero vector (left unnormalized).
pub fn tfidf_vector(doc: &str, space: &FeatureSpace) -> SparseVector {
    let mut counts: HashMap<u32, u32> = HashMap::new();
    let mut total_positions = 0u64;
    for gram in ngram_positions(doc, space.max_n) {
        total_positions += 1;
        if let Some(&col) = space.token_index.get(gram) {
            *counts.entry(col).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return SparseVector { entries: Vec::new() };
    }

    let n_d = total_positions as f64;
    let mut entries: Vec<(u32, f64)> = counts
        .into_iter()
        .map(|(col, count)| (col, count as f64 / n_d * space.idf[col as usize]))
        .collect();
    entries.sort_unstable_by_key(|&(c, _)| c);

    let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    for (_, v) in &mut entries {
        *v /= norm;
    }
    SparseVector { entries }
}
