//! Session state rebuilt from its event log.

use groundflow::dialogue::{DialogueFlow, DialogueRecord, DialogueScene, Turn};
use groundflow::recompose::excise_rejected;
use serde::{Deserialize, Serialize};

use crate::reason::RejectionReason;
use crate::ServiceError;

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    SessionCreated { session_id: String, flow: DialogueFlow },
    UtteranceSubmitted { turn_id: usize, text: String },
    SceneRejected { turn_id: usize, reason: RejectionReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Completed,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub turn_id: usize,
    pub reason: RejectionReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub flow: DialogueFlow,
    /// Index of the next scene to annotate.
    pub cursor: usize,
    pub turns: Vec<Turn>,
    pub rejections: Vec<Rejection>,
}

pub fn session_id_for(flow_id: &str) -> String {
    format!("s-{flow_id}")
}

impl Session {
    pub fn new(flow: DialogueFlow) -> Self {
        Session { session_id: session_id_for(&flow.flow_id), flow, cursor: 0, turns: Vec::new(), rejections: Vec::new() }
    }

    pub fn status(&self) -> SessionStatus {
        if !self.rejections.is_empty() {
            SessionStatus::Rejected
        } else if self.cursor >= self.flow.scenes.len() {
            SessionStatus::Completed
        } else {
            SessionStatus::Active
        }
    }

    /// The outstanding scene, if the session still issues one.
    pub fn current_scene(&self) -> Option<&DialogueScene> {
        match self.status() {
            SessionStatus::Active => self.flow.scenes.get(self.cursor),
            _ => None,
        }
    }

    /// Check an event against the current state and apply it.
    pub fn apply(&mut self, event: &Event) -> Result<(), ServiceError> {
        match event {
            Event::SessionCreated { .. } => Err(ServiceError::Corrupt(format!("{}: duplicate creation event", self.session_id))),
            Event::UtteranceSubmitted { turn_id, text } => {
                let scene = self.expect_scene(*turn_id)?.clone();
                if text.trim().is_empty() {
                    return Err(ServiceError::EmptyText);
                }
                self.turns.push(Turn {
                    turn_id: scene.turn_id,
                    role: scene.role,
                    da: scene.da,
                    grounding_sp_ids: scene.grounding_sp_ids.clone(),
                    doc_id: self.flow.doc_id.clone(),
                    irrelevant_marker: scene.irrelevant_marker,
                    utterance: text.clone(),
                });
                self.cursor += 1;
                Ok(())
            }
            Event::SceneRejected { turn_id, reason } => {
                self.expect_scene(*turn_id)?;
                self.rejections.push(Rejection { turn_id: *turn_id, reason: *reason });
                Ok(())
            }
        }
    }

    fn expect_scene(&self, turn_id: usize) -> Result<&DialogueScene, ServiceError> {
        let scene = self.current_scene().ok_or_else(|| ServiceError::NoOutstandingScene(self.session_id.clone()))?;
        if scene.turn_id != turn_id {
            return Err(ServiceError::Corrupt(format!(
                "{}: event for turn {turn_id} while turn {} is outstanding",
                self.session_id, scene.turn_id
            )));
        }
        Ok(scene)
    }

    /// Replay a full log. The first event must create the session.
    pub fn replay(events: &[Event]) -> Result<Session, ServiceError> {
        let Some(Event::SessionCreated { session_id, flow }) = events.first() else {
            return Err(ServiceError::Corrupt("log does not start with session creation".into()));
        };
        let mut s = Session::new(flow.clone());
        s.session_id = session_id.clone();
        for e in &events[1..] {
            s.apply(e)?;
        }
        Ok(s)
    }

    /// The dialogue this session contributes to the corpus: all turns when
    /// completed, the turns before the rejected one when rejected, nothing
    /// while active or when too little survives.
    pub fn to_dialogue(&self, domain: &str) -> Option<DialogueRecord> {
        let record = DialogueRecord {
            dial_id: self.flow.flow_id.clone(),
            doc_ids: vec![self.flow.doc_id.clone()],
            domain: domain.to_string(),
            turns: self.turns.clone(),
        };
        match self.status() {
            SessionStatus::Active => None,
            SessionStatus::Completed => Some(record),
            SessionStatus::Rejected => {
                let ids: Vec<usize> = self.rejections.iter().map(|r| r.turn_id).collect();
                excise_rejected(&record, &ids)
            }
        }
    }
}
