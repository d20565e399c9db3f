//! Reshaping dialogues: irrelevant sub-dialogue injection, multi-document
//! merging and removal of rejected turns.

use std::collections::BTreeSet;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::dialogue::{DialogueRecord, Role, Turn};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecomposeError {
    #[error("dialogue {donor}: donor shares a document with target {target}")]
    SharedDocument { target: String, donor: String },
    #[error("dialogue {0}: no user-initiated, agent-terminated sub-dialogue")]
    NoSubDialogue(String),
    #[error("dialogue {dial_id}: {position} is not a user-turn boundary")]
    BadInsertionPoint { dial_id: String, position: usize },
    #[error("dialogue {dial_id}: turn {turn_id} breaks role alternation at a merge seam")]
    AlternationBroken { dial_id: String, turn_id: usize },
    #[error("merge needs at least one part")]
    NothingToMerge,
    #[error("dialogue {0}: parts of a merge must ground in distinct documents")]
    DuplicateDocument(String),
}

/// Contiguous ranges of `turns` that start on a user turn and end on an
/// agent turn.
pub fn sub_dialogues(turns: &[Turn]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    for (i, a) in turns.iter().enumerate() {
        if a.role != Role::User {
            continue;
        }
        for (j, b) in turns.iter().enumerate().skip(i + 1) {
            if b.role == Role::Agent {
                out.push(i..j + 1);
            }
        }
    }
    out
}

/// Indices at which a block may be inserted: before any user turn, or after
/// the last turn when it is an agent turn.
pub fn insertion_points(turns: &[Turn]) -> Vec<usize> {
    let mut out: Vec<usize> = turns
        .iter()
        .enumerate()
        .filter(|(_, t)| t.role == Role::User)
        .map(|(i, _)| i)
        .collect();
    if turns.last().is_none_or(|t| t.role == Role::Agent) {
        out.push(turns.len());
    }
    out
}

/// Insert `donor.turns[range]` before index `position` of the target,
/// marking the inserted turns irrelevant.
pub fn inject_irrelevant_at(
    target: &DialogueRecord,
    donor: &DialogueRecord,
    range: Range<usize>,
    position: usize,
) -> Result<DialogueRecord, RecomposeError> {
    let target_docs: BTreeSet<&str> = target.doc_ids.iter().map(String::as_str).collect();
    let shares = donor.doc_ids.iter().any(|d| target_docs.contains(d.as_str()))
        || donor.turns[range.clone()].iter().any(|t| target_docs.contains(t.doc_id.as_str()));
    if shares {
        return Err(RecomposeError::SharedDocument { target: target.dial_id.clone(), donor: donor.dial_id.clone() });
    }
    if !sub_dialogues(&donor.turns).contains(&range) {
        return Err(RecomposeError::NoSubDialogue(donor.dial_id.clone()));
    }
    if !insertion_points(&target.turns).contains(&position) {
        return Err(RecomposeError::BadInsertionPoint { dial_id: target.dial_id.clone(), position });
    }
    let mut out = target.clone();
    let block = donor.turns[range].iter().cloned().map(|mut t| {
        t.irrelevant_marker = true;
        t
    });
    out.turns.splice(position..position, block);
    out.renumber();
    Ok(out)
}

/// Insert a random donor sub-dialogue at a random user-turn boundary.
pub fn inject_irrelevant<R: Rng + ?Sized>(
    target: &DialogueRecord,
    donor: &DialogueRecord,
    rng: &mut R,
) -> Result<DialogueRecord, RecomposeError> {
    let ranges = sub_dialogues(&donor.turns);
    let range = ranges.choose(rng).cloned().ok_or_else(|| RecomposeError::NoSubDialogue(donor.dial_id.clone()))?;
    let points = insertion_points(&target.turns);
    let position = *points.choose(rng).ok_or_else(|| RecomposeError::BadInsertionPoint {
        dial_id: target.dial_id.clone(),
        position: 0,
    })?;
    inject_irrelevant_at(target, donor, range, position)
}

/// Concatenate parts grounded in different documents into one dialogue.
pub fn merge_multidoc(parts: &[DialogueRecord]) -> Result<DialogueRecord, RecomposeError> {
    let first = parts.first().ok_or(RecomposeError::NothingToMerge)?;
    if parts.len() == 1 {
        return Ok(first.clone());
    }
    let mut doc_ids: Vec<String> = Vec::new();
    let mut domains: Vec<String> = Vec::new();
    let mut turns: Vec<Turn> = Vec::new();
    let dial_id = parts.iter().map(|p| p.dial_id.as_str()).collect::<Vec<_>>().join("+");
    for part in parts {
        if part.doc_ids.iter().any(|d| doc_ids.contains(d)) {
            return Err(RecomposeError::DuplicateDocument(part.dial_id.clone()));
        }
        doc_ids.extend(part.doc_ids.iter().cloned());
        if !domains.contains(&part.domain) {
            domains.push(part.domain.clone());
        }
        let expected = if turns.len().is_multiple_of(2) { Role::User } else { Role::Agent };
        match part.turns.first() {
            Some(t) if t.role != expected || turns.last().is_some_and(|l| l.role != Role::Agent) => {
                return Err(RecomposeError::AlternationBroken { dial_id: part.dial_id.clone(), turn_id: t.turn_id });
            }
            _ => {}
        }
        turns.extend(part.turns.iter().cloned());
    }
    let mut out = DialogueRecord { dial_id, doc_ids, domain: domains.join("+"), turns };
    out.renumber();
    Ok(out)
}

/// Drop the earliest rejected turn and everything after it; `None` when
/// fewer than two turns would remain.
pub fn excise_rejected(d: &DialogueRecord, rejected_turn_ids: &[usize]) -> Option<DialogueRecord> {
    let Some(&first) = rejected_turn_ids.iter().min() else {
        return Some(d.clone());
    };
    let keep = d.turns.iter().take_while(|t| t.turn_id < first).count();
    if keep < 2 {
        return None;
    }
    let mut out = d.clone();
    out.turns.truncate(keep);
    Some(out)
}

/// Corpus-level settings for [`recompose_corpus`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecomposeConfig {
    /// Probability that a dialogue receives an irrelevant sub-dialogue.
    pub irr_rate: f64,
    /// Number of multi-document dialogues to add.
    pub merge_count: usize,
    /// Parts per multi-document dialogue.
    pub merge_parts: usize,
}

impl Default for RecomposeConfig {
    fn default() -> Self {
        RecomposeConfig { irr_rate: 0.0, merge_count: 0, merge_parts: 2 }
    }
}

/// Apply injection at `irr_rate` to every dialogue, then append
/// `merge_count` merged dialogues built from agent-terminated prefixes of
/// dialogues over distinct documents.
pub fn recompose_corpus<R: Rng + ?Sized>(
    dialogues: &[DialogueRecord],
    config: &RecomposeConfig,
    rng: &mut R,
) -> Result<Vec<DialogueRecord>, RecomposeError> {
    let mut out = Vec::with_capacity(dialogues.len() + config.merge_count);
    for d in dialogues {
        if config.irr_rate > 0.0 && rng.gen_bool(config.irr_rate.min(1.0)) {
            let donors: Vec<&DialogueRecord> = dialogues
                .iter()
                .filter(|o| !o.doc_ids.iter().any(|x| d.doc_ids.contains(x)) && !sub_dialogues(&o.turns).is_empty())
                .collect();
            if let Some(donor) = donors.choose(rng) {
                out.push(inject_irrelevant(d, donor, rng)?);
                continue;
            }
        }
        out.push(d.clone());
    }
    for _ in 0..config.merge_count {
        let mut candidates: Vec<&DialogueRecord> = dialogues
            .iter()
            .filter(|d| d.doc_ids.len() == 1 && d.turns.len() >= 2)
            .collect();
        candidates.shuffle(rng);
        let mut parts: Vec<DialogueRecord> = Vec::new();
        for c in candidates {
            if parts.len() == config.merge_parts {
                break;
            }
            if parts.iter().any(|p| p.doc_ids == c.doc_ids) {
                continue;
            }
            let prefixes: Vec<usize> = c
                .turns
                .iter()
                .enumerate()
                .filter(|(i, t)| t.role == Role::Agent && !t.irrelevant_marker && *i > 0)
                .map(|(i, _)| i + 1)
                .collect();
            if let Some(&len) = prefixes.choose(rng) {
                let mut part = c.clone();
                part.turns.truncate(len);
                parts.push(part);
            }
        }
        if parts.len() == config.merge_parts.max(2) {
            out.push(merge_multidoc(&parts)?);
        }
    }
    Ok(out)
}
