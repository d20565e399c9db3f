//! Sliding-window document trunks for span selection.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::document::Document;

/// Where the gold span falls relative to one trunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TrunkGold {
    /// Fully inside the window. Token offsets are window-local and
    /// end-exclusive; char offsets are relative to the trunk's `char_start`.
    InWindow { token_start: usize, token_end: usize, char_start: usize, char_end: usize },
    /// Absent or only partly inside: start and end both point at the
    /// beginning of the sequence.
    NullPosition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trunk {
    pub doc_id: String,
    pub index: usize,
    pub stride: usize,
    /// Global token range `[token_start, token_end)`.
    pub token_start: usize,
    pub token_end: usize,
    /// Global char range from the first token start to the last token end.
    pub char_start: usize,
    pub char_end: usize,
    /// Global char range of each local token.
    pub offsets: Vec<(usize, usize)>,
    pub gold: Option<TrunkGold>,
}

impl Trunk {
    pub fn len(&self) -> usize {
        self.token_end - self.token_start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Map a local char range back to document offsets.
    pub fn to_global_chars(&self, start: usize, end: usize) -> (usize, usize) {
        (self.char_start + start, self.char_start + end)
    }

    /// Map a local token range back to the document char range it covers.
    pub fn token_range_to_chars(&self, start: usize, end: usize) -> Option<(usize, usize)> {
        if start >= end || end > self.offsets.len() {
            return None;
        }
        Some((self.offsets[start].0, self.offsets[end - 1].1))
    }
}

/// Whitespace-delimited tokens as char ranges.
pub fn token_offsets(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut n = 0;
    for (i, c) in text.chars().enumerate() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
        n = i + 1;
    }
    if let Some(s) = start {
        out.push((s, n));
    }
    out
}

/// Number of windows the sliding rule produces for `n` tokens.
pub fn trunk_count(n: usize, max_tokens: usize, stride: usize) -> usize {
    if n <= max_tokens {
        1
    } else {
        (n - max_tokens).div_ceil(stride) + 1
    }
}

/// Split `text` into windows of at most `max_tokens` whitespace tokens whose
/// starts advance by `stride`. `gold` is a char range in `text`; it is
/// labelled in every window that holds all of its tokens.
pub fn chunk_text(
    doc_id: &str,
    text: &str,
    max_tokens: usize,
    stride: usize,
    gold: Option<(usize, usize)>,
) -> Result<Vec<Trunk>, EvalError> {
    if max_tokens < 1 {
        return Err(EvalError::InvalidWindow("max_tokens must be at least 1".into()));
    }
    if stride < 1 || stride > max_tokens {
        return Err(EvalError::InvalidWindow(format!("stride must lie in 1..={max_tokens}, got {stride}")));
    }
    let tokens = token_offsets(text);
    // tokens touched by the gold char range
    let gold_tokens = gold.map(|(gs, ge)| {
        let first = tokens.iter().position(|&(_, e)| e > gs);
        let last = tokens.iter().rposition(|&(s, _)| s < ge);
        match (first, last) {
            (Some(f), Some(l)) if f <= l && gs < ge => Some((f, l + 1)),
            _ => None,
        }
    });
    let count = trunk_count(tokens.len(), max_tokens, stride);
    let mut out = Vec::with_capacity(count);
    for index in 0..count {
        let token_start = index * stride;
        let token_end = (token_start + max_tokens).min(tokens.len());
        let offsets = tokens[token_start.min(tokens.len())..token_end].to_vec();
        let char_start = offsets.first().map_or(0, |o| o.0);
        let char_end = offsets.last().map_or(0, |o| o.1);
        let gold = gold.zip(gold_tokens).map(|((gs, ge), toks)| match toks {
            Some((f, l)) if f >= token_start && l <= token_end && gs >= char_start && ge <= char_end => {
                TrunkGold::InWindow {
                    token_start: f - token_start,
                    token_end: l - token_start,
                    char_start: gs - char_start,
                    char_end: ge - char_start,
                }
            }
            _ => TrunkGold::NullPosition,
        });
        out.push(Trunk { doc_id: doc_id.to_string(), index, stride, token_start, token_end, char_start, char_end, offsets, gold });
    }
    Ok(out)
}

pub fn chunk_document(
    doc: &Document,
    max_tokens: usize,
    stride: usize,
    gold: Option<(usize, usize)>,
) -> Result<Vec<Trunk>, EvalError> {
    chunk_text(&doc.doc_id, &doc.text, max_tokens, stride, gold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn thousand_tokens() {
        let t = chunk_text("d", &words(1000), 384, 128, None).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t.iter().map(|t| t.token_start).collect::<Vec<_>>(), [0, 128, 256, 384, 512, 640]);
        assert_eq!(t.last().unwrap().token_end, 1000);
    }

    #[test]
    fn short_doc_keeps_gold() {
        let text = "apply online before the deadline";
        let t = chunk_text("d", text, 50, 10, Some((6, 12))).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].gold, Some(TrunkGold::InWindow { token_start: 1, token_end: 2, char_start: 6, char_end: 12 }));
    }

    #[test]
    fn straddling_gold_is_null() {
        let text = words(10);
        let offs = token_offsets(&text);
        let gold = (offs[3].0, offs[5].1);
        let t = chunk_text("d", &text, 5, 3, Some(gold)).unwrap();
        assert_eq!(t[0].gold, Some(TrunkGold::NullPosition));
        match t[1].gold {
            Some(TrunkGold::InWindow { char_start, char_end, .. }) => {
                assert_eq!(t[1].to_global_chars(char_start, char_end), gold)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_windows() {
        assert!(chunk_text("d", "x", 0, 0, None).is_err());
        assert!(chunk_text("d", "x", 4, 5, None).is_err());
    }
}
