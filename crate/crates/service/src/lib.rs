//! Annotation service: hands out dialogue scenes one at a time, records
//! utterances and rejections in per-session event logs, and exports the
//! collected dialogues.

mod api;
mod reason;
mod report;
mod session;
mod store;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use groundflow::dialogue::{DialogueAct, DialogueFlow, DialogueRecord, DialogueScene, Turn};
use groundflow::document::Document;
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::api::{router, serve};
pub use self::reason::{ParseReasonError, RejectionReason};
pub use self::report::{rejection_report, ReasonRow, RejectionReport};
pub use self::session::{session_id_for, Event, Rejection, Session, SessionStatus};
pub use self::store::EventStore;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown flow {0}")]
    UnknownFlow(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("flow {0} is already claimed")]
    FlowClaimed(String),
    #[error("session {0} has no outstanding scene")]
    NoOutstandingScene(String),
    #[error("utterance text is empty")]
    EmptyText,
    #[error(transparent)]
    InvalidReason(#[from] ParseReasonError),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("{path}: {source}")]
    Store { path: PathBuf, source: std::io::Error },
    #[error("corrupt event log: {0}")]
    Corrupt(String),
}

/// Document excerpt around the grounding span: the innermost section that
/// holds it, with the span's char range inside the excerpt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excerpt {
    pub doc_id: String,
    pub title: String,
    pub text: String,
    pub highlight: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneView {
    pub session_id: String,
    pub status: SessionStatus,
    pub scene: Option<DialogueScene>,
    pub instruction: Option<String>,
    pub grounding_text: Option<String>,
    pub history: Vec<Turn>,
    pub excerpt: Option<Excerpt>,
}

pub fn instruction(scene: &DialogueScene) -> String {
    match (scene.da, scene.yesno_outcome) {
        (DialogueAct::UserRequestQuery, _) => "As the user, ask about the highlighted text.".into(),
        (DialogueAct::AgentRequestQuery, _) => {
            "As the agent, ask whether the highlighted condition applies to the user.".into()
        }
        (DialogueAct::UserRespondYesno, Some(false)) => "As the user, answer the agent's question with no.".into(),
        (DialogueAct::UserRespondYesno, _) => "As the user, answer the agent's question with yes.".into(),
        (DialogueAct::AgentRespondReply, _) => "As the agent, reply with the highlighted text.".into(),
    }
}

pub struct Service {
    flows: HashMap<String, DialogueFlow>,
    docs: HashMap<String, Document>,
    store: EventStore,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    /// Serializes session creation so a flow is claimed once.
    claims: Mutex<()>,
}

impl Service {
    /// Open the store and rebuild every session by replaying its log.
    pub fn open(flows: Vec<DialogueFlow>, docs: Vec<Document>, store: EventStore) -> Result<Self, ServiceError> {
        let mut sessions = BTreeMap::new();
        for events in store.load_all()? {
            if events.is_empty() {
                continue;
            }
            let s = Session::replay(&events)?;
            sessions.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
        }
        log::info!("replayed {} sessions from {}", sessions.len(), store.dir().display());
        Ok(Service {
            flows: flows.into_iter().map(|f| (f.flow_id.clone(), f)).collect(),
            docs: docs.into_iter().map(|d| (d.doc_id.clone(), d)).collect(),
            store,
            sessions: RwLock::new(sessions),
            claims: Mutex::new(()),
        })
    }

    pub fn store(&self) -> &EventStore {
        &self.store
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions.read().get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn create_session(&self, flow_id: &str) -> Result<String, ServiceError> {
        let flow = self.flows.get(flow_id).ok_or_else(|| ServiceError::UnknownFlow(flow_id.to_string()))?;
        let _claim = self.claims.lock();
        let id = session_id_for(flow_id);
        if self.sessions.read().contains_key(&id) {
            return Err(ServiceError::FlowClaimed(flow_id.to_string()));
        }
        self.store.append(&id, &Event::SessionCreated { session_id: id.clone(), flow: flow.clone() })?;
        self.sessions.write().insert(id.clone(), Arc::new(Mutex::new(Session::new(flow.clone()))));
        Ok(id)
    }

    pub fn snapshot(&self, session_id: &str) -> Result<Session, ServiceError> {
        Ok(self.session(session_id)?.lock().clone())
    }

    pub fn sessions(&self) -> Vec<Session> {
        self.sessions.read().values().map(|s| s.lock().clone()).collect()
    }

    fn excerpt(&self, doc_id: &str, span_ids: &[String]) -> Option<Excerpt> {
        let doc = self.docs.get(doc_id)?;
        let spans: Vec<_> = span_ids.iter().filter_map(|id| doc.span(id)).collect();
        let first = spans.first()?;
        let section = doc
            .sections
            .iter()
            .filter(|s| s.start <= first.start && first.end <= s.end)
            .max_by_key(|s| s.level)?;
        let highlight = spans
            .iter()
            .filter(|sp| section.start <= sp.start && sp.end <= section.end)
            .map(|sp| (sp.start - section.start, sp.end - section.start))
            .collect();
        Some(Excerpt {
            doc_id: doc.doc_id.clone(),
            title: doc.title.clone(),
            text: doc.slice(section.start, section.end).to_string(),
            highlight,
        })
    }

    fn grounding_text(&self, doc_id: &str, span_ids: &[String]) -> Option<String> {
        let doc = self.docs.get(doc_id)?;
        let parts: Vec<&str> = span_ids.iter().filter_map(|id| doc.span(id).map(|s| doc.span_text(s))).collect();
        (!parts.is_empty()).then(|| parts.join(" "))
    }

    pub fn scene(&self, session_id: &str) -> Result<SceneView, ServiceError> {
        let s = self.session(session_id)?.lock().clone();
        let scene = s.current_scene().cloned();
        Ok(SceneView {
            session_id: s.session_id.clone(),
            status: s.status(),
            instruction: scene.as_ref().map(instruction),
            grounding_text: scene.as_ref().and_then(|sc| self.grounding_text(&s.flow.doc_id, &sc.grounding_sp_ids)),
            excerpt: scene.as_ref().and_then(|sc| self.excerpt(&s.flow.doc_id, &sc.grounding_sp_ids)),
            scene,
            history: s.turns,
        })
    }

    /// Validate, log, then apply. The session lock is held across the
    /// append so log order equals apply order.
    fn record(&self, session_id: &str, make: impl FnOnce(usize) -> Event) -> Result<Session, ServiceError> {
        let session = self.session(session_id)?;
        let mut s = session.lock();
        let turn_id = s.current_scene().map(|sc| sc.turn_id).ok_or_else(|| ServiceError::NoOutstandingScene(session_id.to_string()))?;
        let event = make(turn_id);
        let mut next = s.clone();
        next.apply(&event)?;
        self.store.append(session_id, &event)?;
        *s = next;
        Ok(s.clone())
    }

    pub fn submit_utterance(&self, session_id: &str, text: &str) -> Result<Session, ServiceError> {
        if text.trim().is_empty() {
            self.session(session_id)?;
            return Err(ServiceError::EmptyText);
        }
        self.record(session_id, |turn_id| Event::UtteranceSubmitted { turn_id, text: text.to_string() })
    }

    pub fn reject_scene(&self, session_id: &str, reason: RejectionReason) -> Result<Session, ServiceError> {
        self.record(session_id, |turn_id| Event::SceneRejected { turn_id, reason })
    }

    fn domain_of(&self, doc_id: &str) -> &str {
        self.docs.get(doc_id).map_or("", |d| d.domain.as_str())
    }

    /// Completed dialogues and the surviving prefix of rejected ones, in
    /// session id order.
    pub fn export(&self) -> Vec<DialogueRecord> {
        self.sessions()
            .iter()
            .filter_map(|s| s.to_dialogue(self.domain_of(&s.flow.doc_id)))
            .collect()
    }

    pub fn report(&self) -> RejectionReport {
        rejection_report(&self.sessions())
    }
}
