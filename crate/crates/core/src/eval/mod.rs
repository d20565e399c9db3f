//! Metrics and lexical baselines for the grounding, generation and
//! retrieval tasks.

mod bleu;
mod bm25;
mod chunk;
mod grounding;
mod retrieval;
mod text;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::bleu::{bleu, bleu_tokens, pair_stats, BleuStats, MAX_ORDER};
pub use self::bm25::{bm25_build, bm25_rank, Bm25Index, Ranked, DEFAULT_B, DEFAULT_K1};
pub use self::chunk::{chunk_document, chunk_text, token_offsets, trunk_count, Trunk, TrunkGold};
pub use self::grounding::{
    eval_generation, eval_grounding, generation_gold, grounding_gold, item_id, EmF1, GenerationItem,
    GenerationReport, GoldItem, GroundingItem, GroundingReport, Prediction,
};
pub use self::retrieval::{
    document_index, eval_retrieval, eval_retrieval_with, query_of, RetrievalItem, RetrievalReport,
};
pub use self::text::{exact_match, normalize_text, normalized_tokens, token_f1};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("no prediction for gold item {0}")]
    MissingPrediction(String),
    #[error("prediction {0} has no gold item")]
    UnknownPrediction(String),
    #[error("duplicate prediction id {0}")]
    DuplicateId(String),
    #[error("item {id}: unknown document {doc_id}")]
    UnknownDocument { id: String, doc_id: String },
    #[error("item {id}: span {span_id} not in document {doc_id}")]
    UnknownSpan { id: String, doc_id: String, span_id: String },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum EvalReport {
    Grounding(GroundingReport),
    Generation(GenerationReport),
    Retrieval(Vec<RetrievalReport>),
}
