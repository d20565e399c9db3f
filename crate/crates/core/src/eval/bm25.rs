//! Okapi BM25 over normalized whitespace tokens.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::text::normalized_tokens;
use super::EvalError;

pub const DEFAULT_K1: f64 = 1.5;
pub const DEFAULT_B: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    pub k1: f64,
    pub b: f64,
    pub doc_ids: Vec<String>,
    pub doc_len: Vec<usize>,
    pub tf: Vec<HashMap<String, usize>>,
    pub df: HashMap<String, usize>,
    pub avgdl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub doc_id: String,
    pub score: f64,
}

pub fn bm25_build<'a, I>(corpus: I, k1: f64, b: f64) -> Result<Bm25Index, EvalError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut index = Bm25Index { k1, b, doc_ids: Vec::new(), doc_len: Vec::new(), tf: Vec::new(), df: HashMap::new(), avgdl: 0.0 };
    for (id, text) in corpus {
        let tokens = normalized_tokens(text);
        let mut tf: HashMap<String, usize> = HashMap::new();
        for t in tokens.iter() {
            *tf.entry(t.clone()).or_default() += 1;
        }
        for t in tf.keys() {
            *index.df.entry(t.clone()).or_default() += 1;
        }
        index.doc_ids.push(id.to_string());
        index.doc_len.push(tokens.len());
        index.tf.push(tf);
    }
    if index.doc_ids.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    index.avgdl = index.doc_len.iter().sum::<usize>() as f64 / index.doc_ids.len() as f64;
    Ok(index)
}

impl Bm25Index {
    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    /// ln((N - df + 0.5) / (df + 0.5) + 1), which stays positive even for
    /// terms in every document.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.len() as f64;
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn term_score(&self, doc: usize, term: &str) -> f64 {
        let tf = self.tf[doc].get(term).copied().unwrap_or(0) as f64;
        if tf == 0.0 {
            return 0.0;
        }
        let norm = if self.avgdl > 0.0 { self.doc_len[doc] as f64 / self.avgdl } else { 0.0 };
        self.idf(term) * tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * norm))
    }

    /// Sum over query tokens, repeats included.
    pub fn score(&self, doc: usize, query: &str) -> f64 {
        normalized_tokens(query).iter().map(|t| self.term_score(doc, t)).sum()
    }
}

/// Every indexed document by descending score, ties by ascending doc id.
/// An empty query ranks nothing.
pub fn bm25_rank(index: &Bm25Index, query: &str) -> Vec<Ranked> {
    let terms = normalized_tokens(query);
    if terms.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<Ranked> = (0..index.len())
        .map(|d| Ranked {
            doc_id: index.doc_ids[d].clone(),
            score: terms.iter().map(|t| index.term_score(d, t)).sum(),
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
    out
}
