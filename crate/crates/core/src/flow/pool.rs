//! Candidate pool and the scene-sequencing rules.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{FlowError, GenConfig};
use crate::dialogue::{DialogueAct, DialogueScene, Role};
use crate::graph::{SpanGraph, SpanRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpanStatus {
    Fresh,
    Selected,
    Established,
    Excluded,
}

/// Per-session selection state over one span graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePool {
    status: BTreeMap<String, SpanStatus>,
    solutions: Vec<String>,
    preconditions: Vec<String>,
    titles: Vec<String>,
    conditions: HashMap<String, Vec<String>>,
    under_title: HashMap<String, Vec<String>>,
    active: Option<String>,
}

/// A generated scene plus the solution the current exchange is about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub scene: DialogueScene,
    pub focus: Option<String>,
}

pub fn init_pool(graph: &SpanGraph) -> Result<CandidatePool, FlowError> {
    let of_role = |role: SpanRole| -> Vec<String> {
        graph.nodes.iter().filter(|n| n.role == role).map(|n| n.span_id.clone()).collect()
    };
    let solutions = of_role(SpanRole::Solution);
    if solutions.is_empty() {
        return Err(FlowError::Ungeneratable(graph.doc_id.clone()));
    }
    let preconditions = of_role(SpanRole::Precondition);
    let titles = of_role(SpanRole::Title);

    let mut conditions = HashMap::new();
    for s in &solutions {
        let conds = graph
            .conditions_for(s)
            .expect("solution is a graph node")
            .into_iter()
            .filter(|c| graph.role(c) == Some(SpanRole::Precondition))
            .collect::<Vec<_>>();
        conditions.insert(s.clone(), conds);
    }
    let under_title = titles
        .iter()
        .map(|t| {
            let sols = graph
                .descendants(t)
                .into_iter()
                .filter(|d| graph.role(d) == Some(SpanRole::Solution))
                .collect();
            (t.clone(), sols)
        })
        .collect();

    let status = solutions
        .iter()
        .chain(&preconditions)
        .chain(&titles)
        .map(|id| (id.clone(), SpanStatus::Fresh))
        .collect();
    Ok(CandidatePool { status, solutions, preconditions, titles, conditions, under_title, active: None })
}

impl CandidatePool {
    pub fn status(&self, id: &str) -> Option<SpanStatus> {
        self.status.get(id).copied()
    }

    /// Number of precondition and solution spans.
    pub fn len(&self) -> usize {
        self.solutions.len() + self.preconditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn titles(&self) -> &[String] {
        &self.titles
    }

    pub fn active(&self) -> Option<&str> {
        self.active.as_deref()
    }

    /// Precondition and solution spans still fresh.
    pub fn fresh_candidates(&self) -> Vec<&str> {
        self.solutions
            .iter()
            .chain(&self.preconditions)
            .filter(|id| self.status(id) == Some(SpanStatus::Fresh))
            .map(String::as_str)
            .collect()
    }

    pub fn conditions(&self, solution: &str) -> &[String] {
        self.conditions.get(solution).map(Vec::as_slice).unwrap_or(&[])
    }

    fn open_conditions(&self, solution: &str) -> Vec<&String> {
        self.conditions(solution)
            .iter()
            .filter(|c| self.status(c) == Some(SpanStatus::Fresh))
            .collect()
    }

    /// A fresh solution none of whose conditions has been ruled out.
    fn is_eligible(&self, solution: &str) -> bool {
        self.status(solution) == Some(SpanStatus::Fresh)
            && self.conditions(solution).iter().all(|c| self.status(c) != Some(SpanStatus::Excluded))
    }

    /// Turns an exchange about `solution` takes when every open condition
    /// is confirmed.
    fn cost(&self, solution: &str) -> usize {
        2 + 2 * self.open_conditions(solution).len()
    }

    fn set(&mut self, id: &str, to: SpanStatus) {
        let Some(cur) = self.status.get_mut(id) else { return };
        let allowed = matches!(
            (*cur, to),
            (SpanStatus::Fresh, SpanStatus::Selected)
                | (SpanStatus::Selected, SpanStatus::Established)
                | (SpanStatus::Selected, SpanStatus::Excluded)
        );
        debug_assert!(allowed, "illegal status transition {:?} -> {to:?} for {id}", *cur);
        if allowed {
            *cur = to;
        }
    }
}

fn scene(role: Role, da: DialogueAct, span: &str, outcome: Option<bool>) -> DialogueScene {
    DialogueScene {
        turn_id: 0,
        role,
        da,
        grounding_sp_ids: vec![span.to_string()],
        irrelevant_marker: false,
        yesno_outcome: outcome,
    }
}

/// Decide the next scene from the pool and the history so far, or `None`
/// when the flow is complete.
///
/// Opening turns query a fresh solution, or (with probability
/// `p_underspecified`) a title whose section holds a solution with open
/// conditions. The agent then asks about open conditions one at a time,
/// each answered by a yes/no turn; a "no" ends the exchange with a reply on
/// the now-excluded solution, and once all conditions hold the agent replies
/// with the solution. New exchanges open only after a reply, while the flow
/// is shorter than `target_turns` and the exchange fits in `max_turns`.
pub fn next_scene<R: Rng + ?Sized>(
    pool: &CandidatePool,
    history: &[DialogueScene],
    config: &GenConfig,
    rng: &mut R,
) -> Option<Step> {
    let last = history.last();
    let grounded = |s: &DialogueScene| s.grounding_sp_ids.first().cloned().unwrap_or_default();
    match last.map(|s| (s.da, s.yesno_outcome)) {
        None | Some((DialogueAct::AgentRespondReply, _)) => open_exchange(pool, history.len(), config, rng),
        Some((DialogueAct::UserRequestQuery, _)) | Some((DialogueAct::UserRespondYesno, Some(true))) => {
            let focus = pool.active.clone()?;
            let open = pool.open_conditions(&focus);
            let scene = match open.choose(rng) {
                Some(c) => scene(Role::Agent, DialogueAct::AgentRequestQuery, c, None),
                None => scene(Role::Agent, DialogueAct::AgentRespondReply, &focus, None),
            };
            Some(Step { scene, focus: Some(focus) })
        }
        Some((DialogueAct::AgentRequestQuery, _)) => {
            let asked = grounded(last?);
            let yes = rng.gen_bool(config.p_yes);
            Some(Step {
                scene: scene(Role::User, DialogueAct::UserRespondYesno, &asked, Some(yes)),
                focus: pool.active.clone(),
            })
        }
        Some((DialogueAct::UserRespondYesno, _)) => {
            let focus = pool.active.clone()?;
            Some(Step {
                scene: scene(Role::Agent, DialogueAct::AgentRespondReply, &focus, None),
                focus: Some(focus),
            })
        }
    }
}

fn open_exchange<R: Rng + ?Sized>(
    pool: &CandidatePool,
    len: usize,
    config: &GenConfig,
    rng: &mut R,
) -> Option<Step> {
    if len >= config.target_turns {
        return None;
    }
    let budget = config.max_turns.saturating_sub(len);
    let solutions: Vec<&String> = pool
        .solutions
        .iter()
        .filter(|s| pool.is_eligible(s) && pool.cost(s) <= budget)
        .collect();
    let narrowing = |t: &String| -> Vec<&String> {
        pool.under_title
            .get(t)
            .map(|sols| {
                sols.iter()
                    .filter(|s| pool.is_eligible(s) && pool.cost(s) <= budget && !pool.open_conditions(s).is_empty())
                    .collect()
            })
            .unwrap_or_default()
    };
    let titles: Vec<&String> = pool
        .titles
        .iter()
        .filter(|t| pool.status(t) == Some(SpanStatus::Fresh) && !narrowing(t).is_empty())
        .collect();
    if solutions.is_empty() && titles.is_empty() {
        return None;
    }
    let via_title = !titles.is_empty() && (solutions.is_empty() || rng.gen_bool(config.p_underspecified));
    let (grounding, focus) = if via_title {
        let t = *titles.choose(rng)?;
        let s = *narrowing(t).choose(rng)?;
        (t, s)
    } else {
        let s = *solutions.choose(rng)?;
        (s, s)
    };
    Some(Step {
        scene: scene(Role::User, DialogueAct::UserRequestQuery, grounding, None),
        focus: Some(focus.clone()),
    })
}

/// Apply a step: selected spans move to `Selected`, confirmed conditions
/// and answered solutions to `Established`, and a "no" excludes both the
/// condition and the solution it guards.
pub fn update_pool(pool: &mut CandidatePool, step: &Step) {
    let Some(span) = step.scene.grounding_sp_ids.first().cloned() else { return };
    match step.scene.da {
        DialogueAct::UserRequestQuery => {
            pool.set(&span, SpanStatus::Selected);
            if let Some(focus) = &step.focus {
                if *focus != span {
                    pool.set(focus, SpanStatus::Selected);
                }
            }
            pool.active = step.focus.clone();
        }
        DialogueAct::AgentRequestQuery => pool.set(&span, SpanStatus::Selected),
        DialogueAct::UserRespondYesno => {
            if step.scene.yesno_outcome == Some(true) {
                pool.set(&span, SpanStatus::Established);
            } else {
                pool.set(&span, SpanStatus::Excluded);
                if let Some(active) = pool.active.clone() {
                    pool.set(&active, SpanStatus::Excluded);
                }
            }
        }
        DialogueAct::AgentRespondReply => {
            if pool.status(&span) == Some(SpanStatus::Selected) {
                pool.set(&span, SpanStatus::Established);
            }
            pool.active = None;
        }
    }
}
