//! Seeded dialogue-flow generation over span graphs.

mod heatmap;
mod pool;

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::heatmap::{coverage_heatmap, Granularity, Heatmap, DECILES};
pub use self::pool::{init_pool, next_scene, update_pool, CandidatePool, SpanStatus, Step};
use crate::dialogue::{DialogueFlow, DialogueScene};
use crate::graph::SpanGraph;

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("document {0}: ungeneratable document (no solution spans)")]
    Ungeneratable(String),
    #[error("document {doc_id}: flow ended after {len} turns, below the minimum of {min}")]
    TooShort { doc_id: String, len: usize, min: usize },
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("flow {flow_id}: unknown document {doc_id}")]
    UnknownDocument { flow_id: String, doc_id: String },
    #[error("flow {flow_id}: span {span_id} not in document {doc_id}")]
    UnknownSpan { flow_id: String, doc_id: String, span_id: String },
    #[error("no flows to aggregate")]
    NoFlows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub min_turns: usize,
    pub max_turns: usize,
    pub target_turns: usize,
    pub flows_per_doc: usize,
    /// Chance that an opening query grounds in a title rather than a solution.
    pub p_underspecified: f64,
    /// Chance that a yes/no turn answers "yes".
    pub p_yes: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            min_turns: 10,
            max_turns: 18,
            target_turns: 14,
            flows_per_doc: 10,
            p_underspecified: 0.3,
            p_yes: 0.7,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: String| Err(FlowError::InvalidConfig(m));
        if !(self.min_turns <= self.target_turns && self.target_turns <= self.max_turns) {
            return bad(format!(
                "need min_turns <= target_turns <= max_turns, got {} / {} / {}",
                self.min_turns, self.target_turns, self.max_turns
            ));
        }
        for (name, p) in [("p_underspecified", self.p_underspecified), ("p_yes", self.p_yes)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

/// Run the sequencing rules until the flow completes, with a caller-owned
/// random source. Scenes are numbered from 1.
pub fn generate_scenes<R: Rng + ?Sized>(
    graph: &SpanGraph,
    config: &GenConfig,
    rng: &mut R,
) -> Result<Vec<DialogueScene>, FlowError> {
    config.validate()?;
    let mut pool = init_pool(graph)?;
    let mut scenes: Vec<DialogueScene> = Vec::new();
    while let Some(mut step) = next_scene(&pool, &scenes, config, rng) {
        update_pool(&mut pool, &step);
        step.scene.turn_id = scenes.len() + 1;
        scenes.push(step.scene);
    }
    if scenes.len() < config.min_turns {
        return Err(FlowError::TooShort { doc_id: graph.doc_id.clone(), len: scenes.len(), min: config.min_turns });
    }
    Ok(scenes)
}

/// Generate one flow; `config.seed` fully determines the result.
pub fn generate_flow(graph: &SpanGraph, config: &GenConfig) -> Result<DialogueFlow, FlowError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scenes = generate_scenes(graph, config, &mut rng)?;
    Ok(DialogueFlow {
        flow_id: format!("{}-{:016x}", graph.doc_id, config.seed),
        doc_id: graph.doc_id.clone(),
        seed: config.seed,
        scenes,
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-flow seed derived from the run seed, the document id and an attempt
/// counter.
pub fn flow_seed(base: u64, doc_id: &str, attempt: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in doc_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(splitmix64(base ^ h).wrapping_add(attempt))
}

/// Up to `config.flows_per_doc` distinct flows for one document. Gives up
/// after four attempts per requested flow.
pub fn generate_flows(graph: &SpanGraph, config: &GenConfig) -> Result<Vec<DialogueFlow>, FlowError> {
    config.validate()?;
    init_pool(graph)?;
    let mut seen: HashSet<Vec<DialogueScene>> = HashSet::new();
    let mut flows = Vec::new();
    let mut last_err = None;
    for attempt in 0..(config.flows_per_doc as u64 * 4) {
        if flows.len() == config.flows_per_doc {
            break;
        }
        let cfg = GenConfig { seed: flow_seed(config.seed, &graph.doc_id, attempt), ..config.clone() };
        match generate_flow(graph, &cfg) {
            Ok(flow) => {
                if seen.insert(flow.scenes.clone()) {
                    flows.push(flow);
                }
            }
            Err(e @ FlowError::TooShort { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    match (flows.is_empty(), last_err) {
        (true, Some(e)) => Err(e),
        _ => Ok(flows),
    }
}
