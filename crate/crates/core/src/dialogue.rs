//! Dialogue scenes, flows and completed dialogue records.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Agent,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::User => Role::Agent,
            Role::Agent => Role::User,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::User => "user",
            Role::Agent => "agent",
        })
    }
}

/// The four aggregated dialogue-act categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DialogueAct {
    UserRequestQuery,
    UserRespondYesno,
    AgentRequestQuery,
    AgentRespondReply,
}

impl DialogueAct {
    pub const ALL: [DialogueAct; 4] = [
        DialogueAct::UserRequestQuery,
        DialogueAct::UserRespondYesno,
        DialogueAct::AgentRequestQuery,
        DialogueAct::AgentRespondReply,
    ];

    pub fn role(self) -> Role {
        match self {
            DialogueAct::UserRequestQuery | DialogueAct::UserRespondYesno => Role::User,
            DialogueAct::AgentRequestQuery | DialogueAct::AgentRespondReply => Role::Agent,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DialogueAct::UserRequestQuery => "user_request_query",
            DialogueAct::UserRespondYesno => "user_respond_yesno",
            DialogueAct::AgentRequestQuery => "agent_request_query",
            DialogueAct::AgentRespondReply => "agent_respond_reply",
        }
    }
}

impl fmt::Display for DialogueAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DialogueScene {
    pub turn_id: usize,
    pub role: Role,
    pub da: DialogueAct,
    pub grounding_sp_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub irrelevant_marker: bool,
    /// Answer the writer must verbalize on `user_respond_yesno` turns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yesno_outcome: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueFlow {
    pub flow_id: String,
    pub doc_id: String,
    pub seed: u64,
    pub scenes: Vec<DialogueScene>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub turn_id: usize,
    pub role: Role,
    pub da: DialogueAct,
    pub grounding_sp_ids: Vec<String>,
    pub doc_id: String,
    #[serde(default)]
    pub irrelevant_marker: bool,
    pub utterance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub dial_id: String,
    /// Grounding documents; the first one is the primary document.
    pub doc_ids: Vec<String>,
    pub domain: String,
    pub turns: Vec<Turn>,
}

impl DialogueRecord {
    pub fn primary_doc(&self) -> &str {
        self.doc_ids.first().map(String::as_str).unwrap_or("")
    }

    /// Turn ids are 1..n and roles alternate starting with the user.
    pub fn is_well_formed(&self) -> bool {
        self.turns
            .iter()
            .enumerate()
            .all(|(i, t)| t.turn_id == i + 1 && t.role == if i % 2 == 0 { Role::User } else { Role::Agent })
    }

    pub fn renumber(&mut self) {
        for (i, t) in self.turns.iter_mut().enumerate() {
            t.turn_id = i + 1;
        }
    }
}
