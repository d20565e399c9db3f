//! Corpus-level BLEU-1..4.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvalError;

pub const MAX_ORDER: usize = 4;

/// Clipped n-gram counts for one candidate/reference pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub cand_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.cand_len += other.cand_len;
        self.ref_len += other.ref_len;
    }

    /// BLEU-1..4 as percentages: geometric mean of the modified precisions
    /// of orders 1..n with uniform weights, times the brevity penalty. No
    /// smoothing, so any order without matches gives 0.
    pub fn scores(&self) -> [f64; MAX_ORDER] {
        let mut out = [0.0; MAX_ORDER];
        if self.cand_len == 0 {
            return out;
        }
        let bp = if self.cand_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.cand_len as f64).exp()
        };
        let mut log_sum = 0.0;
        for (n, (&m, &t)) in self.matches.iter().zip(&self.totals).enumerate() {
            if m == 0 || t == 0 {
                break;
            }
            log_sum += (m as f64 / t as f64).ln();
            out[n] = 100.0 * bp * (log_sum / (n + 1) as f64).exp();
        }
        out
    }
}

pub fn bleu_tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn ngrams<'t, 'a>(tokens: &'t [&'a str], n: usize) -> HashMap<&'t [&'a str], usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

pub fn pair_stats(candidate: &str, reference: &str) -> BleuStats {
    let c = bleu_tokens(candidate);
    let r = bleu_tokens(reference);
    let mut stats = BleuStats { cand_len: c.len(), ref_len: r.len(), ..Default::default() };
    for n in 1..=MAX_ORDER {
        let cand = ngrams(&c, n);
        let refs = ngrams(&r, n);
        stats.totals[n - 1] = c.len().saturating_sub(n - 1);
        stats.matches[n - 1] = cand.iter().map(|(g, &k)| k.min(refs.get(g).copied().unwrap_or(0))).sum();
    }
    stats
}

/// Corpus BLEU over whitespace tokens, one reference per candidate.
pub fn bleu(candidates: &[&str], references: &[&str]) -> Result<[f64; MAX_ORDER], EvalError> {
    if candidates.len() != references.len() {
        return Err(EvalError::LengthMismatch { candidates: candidates.len(), references: references.len() });
    }
    if candidates.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut total = BleuStats::default();
    for (c, r) in candidates.iter().zip(references) {
        total.add(&pair_stats(c, r));
    }
    Ok(total.scores())
}
