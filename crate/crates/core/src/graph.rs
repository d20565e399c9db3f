//! Span graph: spans as nodes, structural and discourse relations as edges.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::segment::{connective_class, ConnectiveClass};
use crate::document::{Document, ParagraphKind, SpanTag};

/// Levels of child edges through which conditions are inherited.
pub const INHERIT_DEPTH: usize = 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("document {0}: empty document")]
    EmptyDocument(String),
    #[error("unknown span id {0}")]
    UnknownSpan(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanRole {
    Precondition,
    Solution,
    Title,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Child,
    Sibling,
    Condition,
    Contrast,
    Disjunction,
}

impl From<ConnectiveClass> for RelationKind {
    fn from(c: ConnectiveClass) -> Self {
        match c {
            ConnectiveClass::Condition => RelationKind::Condition,
            ConnectiveClass::Contrast => RelationKind::Contrast,
            ConnectiveClass::Disjunction => RelationKind::Disjunction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanNode {
    pub span_id: String,
    pub role: SpanRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation {
    pub src: String,
    pub dst: String,
    pub kind: RelationKind,
}

/// Nodes are kept in document order; `index` maps span ids to positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawGraph")]
pub struct SpanGraph {
    pub doc_id: String,
    pub nodes: Vec<SpanNode>,
    pub edges: Vec<Relation>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct RawGraph {
    doc_id: String,
    nodes: Vec<SpanNode>,
    edges: Vec<Relation>,
}

impl From<RawGraph> for SpanGraph {
    fn from(raw: RawGraph) -> Self {
        SpanGraph::new(raw.doc_id, raw.nodes, raw.edges)
    }
}

impl SpanGraph {
    pub fn new(doc_id: impl Into<String>, nodes: Vec<SpanNode>, edges: Vec<Relation>) -> Self {
        let index = nodes.iter().enumerate().map(|(i, n)| (n.span_id.clone(), i)).collect();
        SpanGraph { doc_id: doc_id.into(), nodes, edges, index }
    }

    pub fn node(&self, id: &str) -> Option<&SpanNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn role(&self, id: &str) -> Option<SpanRole> {
        self.node(id).map(|n| n.role)
    }

    fn set_role(&mut self, id: &str, role: SpanRole) {
        if let Some(&i) = self.index.get(id) {
            self.nodes[i].role = role;
        }
    }

    pub fn edges_of(&self, kind: RelationKind) -> impl Iterator<Item = &Relation> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    /// Parent along child edges.
    pub fn parent(&self, id: &str) -> Option<&str> {
        self.edges_of(RelationKind::Child).find(|e| e.dst == id).map(|e| e.src.as_str())
    }

    pub fn children(&self, id: &str) -> Vec<&str> {
        self.edges_of(RelationKind::Child).filter(|e| e.src == id).map(|e| e.dst.as_str()).collect()
    }

    /// All descendants along child edges, in document order.
    pub fn descendants(&self, id: &str) -> Vec<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![id.to_string()];
        while let Some(cur) = stack.pop() {
            for c in self.children(&cur) {
                if out.insert(self.index[c]) {
                    stack.push(c.to_string());
                }
            }
        }
        out.into_iter().map(|i| self.nodes[i].span_id.clone()).collect()
    }

    fn check(&self, id: &str) -> Result<(), GraphError> {
        match self.index.contains_key(id) {
            true => Ok(()),
            false => Err(GraphError::UnknownSpan(id.to_string())),
        }
    }

    fn condition_sources(&self, id: &str) -> impl Iterator<Item = &str> {
        let id = id.to_string();
        self.edges_of(RelationKind::Condition)
            .filter(move |e| e.dst == id)
            .map(|e| e.src.as_str())
    }

    /// Conditions a span depends on: sources of condition edges into it, plus
    /// those of its ancestors (and ancestors that are preconditions
    /// themselves), up to [`INHERIT_DEPTH`] child levels up. Document order.
    pub fn conditions_for(&self, id: &str) -> Result<Vec<String>, GraphError> {
        self.check(id)?;
        let mut found = BTreeSet::new();
        for s in self.condition_sources(id) {
            found.insert(self.index[s]);
        }
        let mut cur = id;
        for _ in 0..INHERIT_DEPTH {
            let Some(parent) = self.parent(cur) else { break };
            if self.role(parent) == Some(SpanRole::Precondition) {
                found.insert(self.index[parent]);
            }
            for s in self.condition_sources(parent) {
                found.insert(self.index[s]);
            }
            cur = parent;
        }
        found.remove(&self.index[id]);
        Ok(found.into_iter().map(|i| self.nodes[i].span_id.clone()).collect())
    }

    /// Inverse of [`conditions_for`](Self::conditions_for): every span whose
    /// conditions include `id`.
    pub fn solutions_for(&self, id: &str) -> Result<Vec<String>, GraphError> {
        self.check(id)?;
        let mut out = Vec::new();
        for n in &self.nodes {
            if n.span_id != id && self.conditions_for(&n.span_id)?.iter().any(|c| c == id) {
                out.push(n.span_id.clone());
            }
        }
        Ok(out)
    }
}

/// Structural graph: child edges from section titles to their content and
/// from list introducers to list items, sibling edges between adjacent
/// children of one parent. Discourse edges come from
/// [`label_condition_edges`].
pub fn build_graph(doc: &Document) -> Result<SpanGraph, GraphError> {
    if doc.spans.is_empty() {
        return Err(GraphError::EmptyDocument(doc.doc_id.clone()));
    }
    let nodes = doc
        .spans
        .iter()
        .map(|s| {
            let role = match s.tag {
                SpanTag::Title => SpanRole::Title,
                _ if s.connective.as_deref().and_then(connective_class) == Some(ConnectiveClass::Condition) => {
                    SpanRole::Other
                }
                _ => SpanRole::Solution,
            };
            SpanNode { span_id: s.id_sp.clone(), role }
        })
        .collect();

    let title_of: HashMap<&str, &str> = doc
        .sections
        .iter()
        .filter_map(|s| s.title_span.as_deref().map(|t| (s.sec_id.as_str(), t)))
        .collect();
    let last_span_of: HashMap<&str, &str> = doc
        .spans
        .iter()
        .map(|s| (s.parent_p.as_str(), s.id_sp.as_str()))
        .collect();

    let mut parent: Vec<Option<String>> = Vec::with_capacity(doc.spans.len());
    for s in &doc.spans {
        let p = if s.tag == SpanTag::Title {
            let sec = doc.section(&s.parent_p).expect("title span parent is a section");
            sec.parent_sec.as_deref().and_then(|ps| title_of.get(ps)).map(|t| t.to_string())
        } else {
            let para = doc.paragraph(&s.parent_p).expect("span parent is a paragraph");
            let intro = match para.kind {
                ParagraphKind::ListItem => para
                    .list_intro
                    .as_deref()
                    .and_then(|ip| last_span_of.get(ip))
                    .map(|t| t.to_string()),
                ParagraphKind::Prose => None,
            };
            intro.or_else(|| title_of.get(para.parent_sec.as_str()).map(|t| t.to_string()))
        };
        parent.push(p);
    }

    let mut edges = Vec::new();
    for (s, p) in doc.spans.iter().zip(&parent) {
        if let Some(p) = p {
            edges.push(Relation { src: p.clone(), dst: s.id_sp.clone(), kind: RelationKind::Child });
        }
    }
    let mut last_child: HashMap<Option<&str>, &str> = HashMap::new();
    for (s, p) in doc.spans.iter().zip(&parent) {
        if let Some(prev) = last_child.insert(p.as_deref(), s.id_sp.as_str()) {
            edges.push(Relation { src: prev.to_string(), dst: s.id_sp.clone(), kind: RelationKind::Sibling });
        }
    }
    Ok(SpanGraph::new(doc.doc_id.clone(), nodes, edges))
}

/// Add discourse edges from connective-initiated clauses and from items of
/// lists introduced by a condition ("... if:"), and assign
/// precondition/solution roles along condition edges.
pub fn label_condition_edges(mut graph: SpanGraph, doc: &Document) -> SpanGraph {
    let mut added: Vec<Relation> = Vec::new();

    let mut by_sentence: Vec<Vec<usize>> = Vec::new();
    for (i, s) in doc.spans.iter().enumerate() {
        if s.tag == SpanTag::Title {
            continue;
        }
        match by_sentence.last_mut() {
            Some(group) if doc.spans[group[0]].sentence_id == s.sentence_id => group.push(i),
            _ => by_sentence.push(vec![i]),
        }
    }
    for group in &by_sentence {
        for (k, &si) in group.iter().enumerate() {
            let span = &doc.spans[si];
            let Some(class) = span.connective.as_deref().and_then(connective_class) else {
                continue;
            };
            let main = if k == 0 {
                group.get(1).copied()
            } else {
                group[..k]
                    .iter()
                    .rev()
                    .find(|&&j| doc.spans[j].connective.is_none())
                    .or(group.get(k - 1))
                    .copied()
            };
            if let Some(m) = main {
                added.push(Relation {
                    src: span.id_sp.clone(),
                    dst: doc.spans[m].id_sp.clone(),
                    kind: class.into(),
                });
            }
        }
    }

    let sentence_targets: BTreeSet<&str> = added
        .iter()
        .filter(|e| e.kind == RelationKind::Condition)
        .map(|e| e.dst.as_str())
        .collect();
    let sentence_sources: BTreeSet<&str> = added
        .iter()
        .filter(|e| e.kind == RelationKind::Condition)
        .map(|e| e.src.as_str())
        .collect();
    let mut list_edges = Vec::new();
    for para in &doc.paragraphs {
        let Some(intro_p) = para.list_intro.as_deref() else { continue };
        let Some(intro) = doc.spans.iter().rev().find(|s| s.parent_p == intro_p) else {
            continue;
        };
        if !introduces_conditions(doc.span_text(intro)) || sentence_sources.contains(intro.id_sp.as_str()) {
            continue;
        }
        for s in doc.spans.iter().filter(|s| s.parent_p == para.p_id) {
            if !sentence_targets.contains(s.id_sp.as_str()) {
                list_edges.push(Relation {
                    src: s.id_sp.clone(),
                    dst: intro.id_sp.clone(),
                    kind: RelationKind::Condition,
                });
            }
        }
    }
    added.extend(list_edges);

    // roles follow condition edges; subordinate clauses left without a main
    // clause stay `Other`
    for e in added.iter().filter(|e| e.kind == RelationKind::Condition) {
        graph.set_role(&e.src, SpanRole::Precondition);
    }
    for e in added.iter().filter(|e| e.kind == RelationKind::Condition) {
        graph.set_role(&e.dst, SpanRole::Solution);
    }

    let mut all: BTreeSet<Relation> = graph.edges.iter().cloned().collect();
    for e in added {
        if e.src != e.dst && all.insert(e.clone()) {
            graph.edges.push(e);
        }
    }
    graph
}

/// A list introducer that ends with a condition connective, e.g.
/// "You may be eligible if:".
fn introduces_conditions(text: &str) -> bool {
    let t = text.trim_end();
    let Some(body) = t.strip_suffix(':') else { return false };
    let lower = body.to_lowercase();
    let words: Vec<&str> = lower.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).collect();
    let n = words.len();
    (1..=3.min(n)).any(|k| connective_class(&words[n - k..].join(" ")) == Some(ConnectiveClass::Condition))
}

/// Build and label in one step.
pub fn graph_for(doc: &Document) -> Result<SpanGraph, GraphError> {
    build_graph(doc).map(|g| label_condition_edges(g, doc))
}
