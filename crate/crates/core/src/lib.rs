//! Document-grounded dialogue construction: document ingestion, span
//! graphs, dialogue-flow generation, recomposition, dataset splits and
//! evaluation.

pub mod dataset;
pub mod dialogue;
pub mod document;
pub mod eval;
pub mod flow;
pub mod graph;
pub mod recompose;
pub mod synth;
