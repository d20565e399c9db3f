use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::FlowError;
use crate::dialogue::DialogueFlow;
use crate::document::Document;

pub const DECILES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Token,
    Span,
    Paragraph,
    Section,
}

impl Granularity {
    pub const ALL: [Granularity; 4] = [Granularity::Token, Granularity::Span, Granularity::Paragraph, Granularity::Section];
}

/// Share of grounding contents per position decile (columns) at each
/// granularity (rows). Each row sums to 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub rows: [[f64; DECILES]; 4],
    pub counts: [[usize; DECILES]; 4],
    pub total: usize,
}

impl Heatmap {
    pub fn row(&self, g: Granularity) -> &[f64; DECILES] {
        &self.rows[g as usize]
    }

    /// Plain-text rendering, one row per granularity.
    pub fn render(&self) -> String {
        let mut out = String::from("granularity");
        for d in 1..=DECILES {
            out.push_str(&format!("\t{d}"));
        }
        out.push('\n');
        for g in Granularity::ALL {
            out.push_str(&format!("{g:?}").to_lowercase());
            for v in self.row(g) {
                out.push_str(&format!("\t{v:.1}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Start offsets of each element kind, in document order.
struct Positions {
    starts: [Vec<usize>; 4],
}

impl Positions {
    fn new(doc: &Document) -> Self {
        let mut tokens = Vec::new();
        let mut prev_ws = true;
        for (i, c) in doc.text.chars().enumerate() {
            if !c.is_whitespace() && prev_ws {
                tokens.push(i);
            }
            prev_ws = c.is_whitespace();
        }
        Positions {
            starts: [
                tokens,
                doc.spans.iter().map(|s| s.start).collect(),
                doc.paragraphs.iter().map(|p| p.start).collect(),
                doc.sections.iter().map(|s| s.start).collect(),
            ],
        }
    }

    /// Decile of the element of kind `g` holding char offset `at`: the last
    /// element starting at or before it.
    fn decile(&self, g: Granularity, at: usize) -> usize {
        let starts = &self.starts[g as usize];
        let n = starts.len().max(1);
        let idx = starts.partition_point(|&s| s <= at).saturating_sub(1);
        (idx * DECILES / n).min(DECILES - 1)
    }
}

pub fn coverage_heatmap(flows: &[DialogueFlow], docs: &[Document]) -> Result<Heatmap, FlowError> {
    if flows.is_empty() {
        return Err(FlowError::NoFlows);
    }
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut positions: HashMap<&str, Positions> = HashMap::new();
    let mut counts = [[0usize; DECILES]; 4];
    let mut total = 0;
    for flow in flows {
        let doc = by_id.get(flow.doc_id.as_str()).ok_or_else(|| FlowError::UnknownDocument {
            flow_id: flow.flow_id.clone(),
            doc_id: flow.doc_id.clone(),
        })?;
        let pos = positions.entry(doc.doc_id.as_str()).or_insert_with(|| Positions::new(doc));
        for scene in flow.scenes.iter().filter(|s| !s.irrelevant_marker) {
            for id in &scene.grounding_sp_ids {
                let span = doc.span(id).ok_or_else(|| FlowError::UnknownSpan {
                    flow_id: flow.flow_id.clone(),
                    doc_id: doc.doc_id.clone(),
                    span_id: id.clone(),
                })?;
                for g in Granularity::ALL {
                    counts[g as usize][pos.decile(g, span.start)] += 1;
                }
                total += 1;
            }
        }
    }
    if total == 0 {
        return Err(FlowError::NoFlows);
    }
    let mut rows = [[0.0; DECILES]; 4];
    for (row, cnt) in rows.iter_mut().zip(&counts) {
        for (v, &c) in row.iter_mut().zip(cnt) {
            *v = 100.0 * c as f64 / total as f64;
        }
    }
    Ok(Heatmap { rows, counts, total })
}
