use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::bleu::{pair_stats, BleuStats, MAX_ORDER};
use super::text::{exact_match, token_f1};
use super::EvalError;
use crate::dialogue::{DialogueRecord, Role};
use crate::document::Document;

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    #[serde(default, alias = "text")]
    pub span_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldItem {
    pub id: String,
    pub doc_id: String,
    /// Grounding span text, or the agent utterance for generation; empty
    /// for irrelevant turns.
    pub text: String,
    pub irrelevant: bool,
}

pub fn item_id(dial_id: &str, turn_id: usize) -> String {
    format!("{dial_id}_{turn_id}")
}

/// Gold grounding text for every turn of `role`: the text of its grounding
/// spans joined by a space, or empty when the turn is irrelevant.
pub fn grounding_gold(dialogues: &[DialogueRecord], docs: &[Document], role: Role) -> Result<Vec<GoldItem>, EvalError> {
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut out = Vec::new();
    for d in dialogues {
        for t in d.turns.iter().filter(|t| t.role == role) {
            let id = item_id(&d.dial_id, t.turn_id);
            let text = if t.irrelevant_marker {
                String::new()
            } else {
                let doc = by_id
                    .get(t.doc_id.as_str())
                    .ok_or_else(|| EvalError::UnknownDocument { id: id.clone(), doc_id: t.doc_id.clone() })?;
                let mut parts = Vec::new();
                for sp in &t.grounding_sp_ids {
                    let span = doc
                        .span(sp)
                        .ok_or_else(|| EvalError::UnknownSpan { id: id.clone(), doc_id: doc.doc_id.clone(), span_id: sp.clone() })?;
                    parts.push(doc.span_text(span));
                }
                parts.join(" ")
            };
            out.push(GoldItem { id, doc_id: t.doc_id.clone(), text, irrelevant: t.irrelevant_marker });
        }
    }
    Ok(out)
}

/// Agent utterances as generation references.
pub fn generation_gold(dialogues: &[DialogueRecord]) -> Vec<GoldItem> {
    dialogues
        .iter()
        .flat_map(|d| {
            d.turns.iter().filter(|t| t.role == Role::Agent).map(move |t| GoldItem {
                id: item_id(&d.dial_id, t.turn_id),
                doc_id: t.doc_id.clone(),
                text: t.utterance.clone(),
                irrelevant: t.irrelevant_marker,
            })
        })
        .collect()
}

/// Pair each gold item with its prediction; ids must match one to one.
fn align<'a>(predictions: &'a [Prediction], gold: &'a [GoldItem]) -> Result<Vec<(&'a GoldItem, &'a Prediction)>, EvalError> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in predictions {
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(EvalError::DuplicateId(p.id.clone()));
        }
    }
    let gold_ids: HashSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    if let Some(p) = predictions.iter().find(|p| !gold_ids.contains(p.id.as_str())) {
        return Err(EvalError::UnknownPrediction(p.id.clone()));
    }
    gold.iter()
        .map(|g| by_id.get(g.id.as_str()).map(|p| (g, *p)).ok_or_else(|| EvalError::MissingPrediction(g.id.clone())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingItem {
    pub id: String,
    pub irrelevant: bool,
    pub em: f64,
    pub f1: f64,
}

/// Mean EM and F1 in percent over a group of items.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmF1 {
    pub count: usize,
    pub em: f64,
    pub f1: f64,
}

impl EmF1 {
    fn of<'a>(items: impl Iterator<Item = &'a GroundingItem>) -> Self {
        let mut out = EmF1::default();
        for i in items {
            out.count += 1;
            out.em += i.em;
            out.f1 += i.f1;
        }
        if out.count > 0 {
            out.em = 100.0 * out.em / out.count as f64;
            out.f1 = 100.0 * out.f1 / out.count as f64;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingReport {
    pub all: EmF1,
    pub grounded: EmF1,
    pub irrelevant: EmF1,
    pub items: Vec<GroundingItem>,
}

/// Score span predictions. Grounded items use EM/F1 on normalized text;
/// an irrelevant item scores 1 on both exactly when the prediction is empty.
pub fn eval_grounding(predictions: &[Prediction], gold: &[GoldItem]) -> Result<GroundingReport, EvalError> {
    let items: Vec<GroundingItem> = align(predictions, gold)?
        .into_iter()
        .map(|(g, p)| {
            let (em, f1) = if g.irrelevant {
                let s = if p.span_text.trim().is_empty() { 1.0 } else { 0.0 };
                (s, s)
            } else {
                (exact_match(&p.span_text, &g.text), token_f1(&p.span_text, &g.text))
            };
            GroundingItem { id: g.id.clone(), irrelevant: g.irrelevant, em, f1 }
        })
        .collect();
    Ok(GroundingReport {
        all: EmF1::of(items.iter()),
        grounded: EmF1::of(items.iter().filter(|i| !i.irrelevant)),
        irrelevant: EmF1::of(items.iter().filter(|i| i.irrelevant)),
        items,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationItem {
    pub id: String,
    pub stats: BleuStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub count: usize,
    pub bleu: [f64; MAX_ORDER],
    pub items: Vec<GenerationItem>,
}

/// Corpus BLEU of predicted utterances against the gold ones.
pub fn eval_generation(predictions: &[Prediction], gold: &[GoldItem]) -> Result<GenerationReport, EvalError> {
    let pairs = align(predictions, gold)?;
    if pairs.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut total = BleuStats::default();
    let items = pairs
        .into_iter()
        .map(|(g, p)| {
            let stats = pair_stats(&p.span_text, &g.text);
            total.add(&stats);
            GenerationItem { id: g.id.clone(), stats }
        })
        .collect::<Vec<_>>();
    Ok(GenerationReport { count: items.len(), bleu: total.scores(), items })
}
