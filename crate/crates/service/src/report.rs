use serde::{Deserialize, Serialize};

use crate::reason::RejectionReason;
use crate::session::Session;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonRow {
    pub reason: RejectionReason,
    pub count: usize,
    /// Share of rejected turns, in percent.
    pub percent: f64,
}

/// Rejection rate over annotated turns and the reason distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionReport {
    pub sessions: usize,
    /// Turns written or rejected.
    pub turns: usize,
    pub rejected_turns: usize,
    pub rejected_percent: f64,
    pub reasons: Vec<ReasonRow>,
}

pub fn rejection_report(sessions: &[Session]) -> RejectionReport {
    let mut counts = [0usize; 6];
    let mut turns = 0;
    for s in sessions {
        turns += s.turns.len() + s.rejections.len();
        for r in &s.rejections {
            counts[r.reason as usize] += 1;
        }
    }
    let rejected: usize = counts.iter().sum();
    let pct = |n: usize, d: usize| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
    RejectionReport {
        sessions: sessions.len(),
        turns,
        rejected_turns: rejected,
        rejected_percent: pct(rejected, turns),
        reasons: RejectionReason::ALL
            .into_iter()
            .map(|r| ReasonRow { reason: r, count: counts[r as usize], percent: pct(counts[r as usize], rejected) })
            .collect(),
    }
}

impl RejectionReport {
    /// Two tab-separated columns, the reason text and its share.
    pub fn render(&self) -> String {
        let mut out = String::from("feedback on rejected dialogue scene\t%\n");
        for row in &self.reasons {
            out.push_str(&format!("{}\t{:.1}\n", row.reason.text(), row.percent));
        }
        out
    }
}
