//! Rule-based sentence and clause segmentation.
//!
//! Sentences end at `.`, `!` or `?` followed by whitespace and an upper-case
//! letter, digit or opening quote, unless the word before the period is a
//! known abbreviation. Clauses are cut at discourse connectives.

use serde::{Deserialize, Serialize};

/// Discourse connectives used to cut sentences into clauses, longest first.
pub const CONNECTIVES: &[&str] = &[
    "provided that",
    "as long as",
    "in case",
    "so that",
    "whenever",
    "however",
    "otherwise",
    "because",
    "unless",
    "until",
    "when",
    "but",
    "if",
    "or",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectiveClass {
    Condition,
    Contrast,
    Disjunction,
}

pub fn connective_class(connective: &str) -> Option<ConnectiveClass> {
    match connective {
        "if" | "unless" | "when" | "whenever" | "until" | "in case" | "provided that"
        | "as long as" => Some(ConnectiveClass::Condition),
        "but" | "however" | "otherwise" => Some(ConnectiveClass::Contrast),
        "or" => Some(ConnectiveClass::Disjunction),
        _ => None,
    }
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "e.g", "i.e", "u.s", "u.s.a", "no",
    "inc", "ltd", "co", "corp", "dept", "gov", "a.m", "p.m", "jan", "feb", "mar", "apr", "jun",
    "jul", "aug", "sep", "sept", "oct", "nov", "dec", "approx", "fig", "ave", "blvd", "ph.d",
];

/// Minimum word count on each side of a mid-sentence cut.
const MIN_CLAUSE_WORDS: usize = 3;
/// Minimum word count of a sentence-initial subordinate clause.
const MIN_LEADING_WORDS: usize = 2;

/// A clause as a char range relative to the sentence, with the connective
/// that opens it, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub start: usize,
    pub end: usize,
    pub connective: Option<String>,
}

/// Split `text` into sentences. Ranges are char offsets, trimmed of
/// surrounding whitespace.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j], '"' | '\'' | ')' | ']' | '.' | '!' | '?') {
                j += 1;
            }
            let mut k = j;
            while k < chars.len() && chars[k].is_whitespace() {
                k += 1;
            }
            let boundary = if k == chars.len() {
                true
            } else if k == j {
                false
            } else {
                let next = chars[k];
                let opens = next.is_uppercase() || next.is_ascii_digit() || matches!(next, '"' | '(' | '\'');
                opens && !(c == '.' && is_abbreviation(&chars[start..i]))
            };
            if boundary {
                push_trimmed(&chars, start, j, &mut out);
                start = j;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    push_trimmed(&chars, start, chars.len(), &mut out);
    out
}

fn is_abbreviation(before: &[char]) -> bool {
    let word: String = before
        .iter()
        .rev()
        .take_while(|c| !c.is_whitespace())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    if word.chars().count() == 1 && word.chars().all(char::is_alphabetic) {
        // single initial such as "J."
        return true;
    }
    ABBREVIATIONS.contains(&word.as_str())
}

fn push_trimmed(chars: &[char], mut start: usize, mut end: usize, out: &mut Vec<(usize, usize)>) {
    while start < end && chars[start].is_whitespace() {
        start += 1;
    }
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if start < end {
        out.push((start, end));
    }
}

struct Word {
    start: usize,
    end: usize,
    lower: String,
}

fn words(chars: &[char]) -> Vec<Word> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_alphanumeric() {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '\'' || chars[i] == '’') {
                i += 1;
            }
            let lower = chars[start..i].iter().collect::<String>().to_lowercase();
            out.push(Word { start, end: i, lower });
        } else {
            i += 1;
        }
    }
    out
}

/// Longest connective starting at word `i`, with its length in words.
fn connective_at(ws: &[Word], i: usize) -> Option<(&'static str, usize)> {
    CONNECTIVES.iter().find_map(|conn| {
        let parts: Vec<&str> = conn.split(' ').collect();
        let hit = parts.len() <= ws.len() - i
            && parts.iter().enumerate().all(|(k, p)| ws[i + k].lower == *p);
        hit.then_some((*conn, parts.len()))
    })
}

/// Cut one sentence into clauses at connective boundaries.
///
/// A condition connective opening the sentence cuts at the first comma after
/// it; elsewhere a connective cuts right before itself, provided both sides
/// keep at least three words.
pub fn split_clauses(sentence: &str) -> Vec<Clause> {
    let chars: Vec<char> = sentence.chars().collect();
    let ws = words(&chars);
    let mut cuts: Vec<(usize, Option<String>)> = Vec::new();
    let mut first_word = 0;
    let mut leading: Option<String> = None;

    if let Some((conn, len)) = (!ws.is_empty()).then(|| connective_at(&ws, 0)).flatten() {
        if connective_class(conn) == Some(ConnectiveClass::Condition) || conn == "because" {
            let after = ws[len - 1].end;
            if let Some(off) = chars[after..].iter().position(|&c| c == ',') {
                let comma = after + off;
                let lead_words = ws.iter().take_while(|w| w.end <= comma).count();
                let rest_words = ws.len() - lead_words;
                if lead_words >= MIN_LEADING_WORDS && rest_words >= MIN_LEADING_WORDS {
                    leading = Some(conn.to_string());
                    cuts.push((comma + 1, None));
                    first_word = lead_words;
                }
            }
        }
    }

    let mut last_cut_word = first_word;
    let mut i = first_word.max(1);
    while i < ws.len() {
        if let Some((conn, len)) = connective_at(&ws, i) {
            let before = i - last_cut_word;
            let after = ws.len() - i;
            if before >= MIN_CLAUSE_WORDS && after >= MIN_CLAUSE_WORDS {
                cuts.push((ws[i].start, Some(conn.to_string())));
                last_cut_word = i;
                i += len;
                continue;
            }
        }
        i += 1;
    }

    let mut out = Vec::new();
    let mut start = 0;
    let mut connective = leading;
    for (cut, next_conn) in cuts {
        push_clause(&chars, start, cut, connective.take(), &mut out);
        start = cut;
        connective = next_conn;
    }
    push_clause(&chars, start, chars.len(), connective, &mut out);
    out
}

fn push_clause(chars: &[char], start: usize, end: usize, connective: Option<String>, out: &mut Vec<Clause>) {
    let mut trimmed = Vec::new();
    push_trimmed(chars, start, end, &mut trimmed);
    if let Some(&(s, e)) = trimmed.first() {
        out.push(Clause { start: s, end: e, connective });
    }
}
