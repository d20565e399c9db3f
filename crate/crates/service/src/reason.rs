use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Why an annotator refused to write a turn for a scene. The set is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectionReason {
    NotContextualCondition,
    NotSolution,
    CannotWriteCoherentTurn,
    NotEnoughInformation,
    NotComprehensible,
    Other,
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown rejection reason {0:?}")]
pub struct ParseReasonError(pub String);

impl RejectionReason {
    pub const ALL: [RejectionReason; 6] = [
        RejectionReason::NotContextualCondition,
        RejectionReason::NotSolution,
        RejectionReason::CannotWriteCoherentTurn,
        RejectionReason::NotEnoughInformation,
        RejectionReason::NotComprehensible,
        RejectionReason::Other,
    ];

    /// The option text shown to annotators.
    pub fn text(self) -> &'static str {
        match self {
            RejectionReason::NotContextualCondition => "The selected-text is not a contextual condition.",
            RejectionReason::NotSolution => "The selected-text is not a solution to the query.",
            RejectionReason::CannotWriteCoherentTurn => "Cannot write a turn to be coherent with the chat history.",
            RejectionReason::NotEnoughInformation => {
                "There is not enough information in the selected (or adjacent) text."
            }
            RejectionReason::NotComprehensible => "The selected-text is not Comprehensible.",
            RejectionReason::Other => "Other.",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            RejectionReason::NotContextualCondition => "not-a-contextual-condition",
            RejectionReason::NotSolution => "not-a-solution",
            RejectionReason::CannotWriteCoherentTurn => "cannot-write-coherent-turn",
            RejectionReason::NotEnoughInformation => "not-enough-information",
            RejectionReason::NotComprehensible => "not-comprehensible",
            RejectionReason::Other => "other",
        }
    }
}

impl fmt::Display for RejectionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

/// Accepts the option text verbatim or its slug.
impl FromStr for RejectionReason {
    type Err = ParseReasonError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RejectionReason::ALL
            .into_iter()
            .find(|r| r.text() == s || r.slug() == s)
            .ok_or_else(|| ParseReasonError(s.to_string()))
    }
}

impl Serialize for RejectionReason {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.text())
    }
}

impl<'de> Deserialize<'de> for RejectionReason {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_slug_round_trip() {
        for r in RejectionReason::ALL {
            assert_eq!(r.text().parse::<RejectionReason>(), Ok(r));
            assert_eq!(r.slug().parse::<RejectionReason>(), Ok(r));
            let json = serde_json::to_string(&r).unwrap();
            assert_eq!(serde_json::from_str::<RejectionReason>(&json).unwrap(), r);
        }
    }

    #[test]
    fn near_misses_are_rejected() {
        assert!("The selected-text is not a contextual condition".parse::<RejectionReason>().is_err());
        assert!("other.".parse::<RejectionReason>().is_err());
    }
}
