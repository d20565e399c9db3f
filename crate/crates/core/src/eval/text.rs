//! Answer normalization and the EM / token-F1 metrics.

use std::collections::HashMap;

/// Lowercase, drop ASCII punctuation, drop the articles a/an/the, and
/// collapse whitespace.
pub fn normalize_text(s: &str) -> String {
    let lower = s.to_lowercase();
    let no_punct: String = lower.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    no_punct
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn normalized_tokens(s: &str) -> Vec<String> {
    normalize_text(s).split_whitespace().map(str::to_string).collect()
}

pub fn exact_match(pred: &str, gold: &str) -> f64 {
    if normalize_text(pred) == normalize_text(gold) {
        1.0
    } else {
        0.0
    }
}

/// Harmonic mean of token precision and recall with multiset overlap.
/// When either side normalizes to nothing the score is 1 only if both do.
pub fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = normalized_tokens(pred);
    let g = normalized_tokens(gold);
    if p.is_empty() || g.is_empty() {
        return if p.is_empty() && g.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_steps() {
        assert_eq!(normalize_text("  The Veterans' Choice-Program!  "), "veterans choiceprogram");
        assert_eq!(normalize_text("An apple a day"), "apple day");
        assert_eq!(normalize_text("theory"), "theory");
    }

    #[test]
    fn overlap_f1() {
        assert_eq!(exact_match("a b c", "b c d"), 0.0);
        // "a" is an article, so pred is {b, c} against {b, c, d}
        assert!((token_f1("a b c", "b c d") - 0.8).abs() < 1e-12);
        assert!((token_f1("x b c", "b c d") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(token_f1("", ""), 1.0);
        assert_eq!(token_f1("the", ""), 1.0);
        assert_eq!(token_f1("x", ""), 0.0);
    }
}
