use serde::{Deserialize, Serialize};

use super::bm25::{bm25_build, bm25_rank, Bm25Index};
use super::EvalError;
use crate::dialogue::DialogueRecord;
use crate::document::Document;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalItem {
    pub dial_id: String,
    pub gold_doc: String,
    /// 1-based rank of the gold document; `None` when it is not indexed.
    pub gold_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub n_turns: usize,
    pub k_list: Vec<usize>,
    /// R@k in percent, aligned with `k_list`.
    pub recall: Vec<f64>,
    pub scored: usize,
    /// Dialogues with fewer than `n_turns` turns.
    pub skipped: usize,
    pub items: Vec<RetrievalItem>,
}

impl RetrievalReport {
    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.k_list.iter().position(|&x| x == k).map(|i| self.recall[i])
    }
}

pub fn document_index(docs: &[Document], k1: f64, b: f64) -> Result<Bm25Index, EvalError> {
    bm25_build(docs.iter().map(|d| (d.doc_id.as_str(), d.text.as_str())), k1, b)
}

/// The utterances of the earliest `n` turns, joined by spaces.
pub fn query_of(dialogue: &DialogueRecord, n: usize) -> Option<String> {
    if dialogue.turns.len() < n {
        return None;
    }
    Some(dialogue.turns[..n].iter().map(|t| t.utterance.as_str()).collect::<Vec<_>>().join(" "))
}

pub fn eval_retrieval_with(
    index: &Bm25Index,
    dialogues: &[DialogueRecord],
    n_turns: usize,
    k_list: &[usize],
) -> RetrievalReport {
    let mut items = Vec::new();
    let mut skipped = 0;
    for d in dialogues {
        let Some(query) = query_of(d, n_turns) else {
            skipped += 1;
            continue;
        };
        let gold = d.primary_doc().to_string();
        let gold_rank = bm25_rank(index, &query).iter().position(|r| r.doc_id == gold).map(|p| p + 1);
        items.push(RetrievalItem { dial_id: d.dial_id.clone(), gold_doc: gold, gold_rank });
    }
    let recall = k_list
        .iter()
        .map(|&k| {
            if items.is_empty() {
                return 0.0;
            }
            let hits = items.iter().filter(|i| i.gold_rank.is_some_and(|r| r <= k)).count();
            100.0 * hits as f64 / items.len() as f64
        })
        .collect();
    RetrievalReport { n_turns, k_list: k_list.to_vec(), recall, scored: items.len(), skipped, items }
}

/// Rank every document for the query built from each dialogue's earliest
/// `n_turns` turns and report R@k for each k.
pub fn eval_retrieval(
    dialogues: &[DialogueRecord],
    docs: &[Document],
    n_turns: usize,
    k_list: &[usize],
) -> Result<RetrievalReport, EvalError> {
    let index = document_index(docs, super::bm25::DEFAULT_K1, super::bm25::DEFAULT_B)?;
    Ok(eval_retrieval_with(&index, dialogues, n_turns, k_list))
}
