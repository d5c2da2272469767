use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{classify_task, complexity_score, ClassifierConfig, ComplexityConfig};
use crate::domain::{InferenceRequest, ModelKind, NodePair, RequestCategory, Tier, Topology};
use crate::error::{Error, Result};
use crate::moo::{AssignmentGenome, ThresholdGenome};
use crate::rng::{self, tag};

/// Point-in-time view of the nodes, indexed like `Topology::nodes`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemState {
    /// Requests waiting for a free slot.
    pub queue_lengths: Vec<u32>,
    /// Requests currently being served.
    pub in_flight: Vec<u32>,
}

impl SystemState {
    pub fn idle(topology: &Topology) -> Self {
        let n = topology.nodes().len();
        SystemState {
            queue_lengths: vec![0; n],
            in_flight: vec![0; n],
        }
    }

    pub fn queue_length(&self, node: usize) -> u32 {
        self.queue_lengths.get(node).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub complexity: f64,
    pub predicted_category: RequestCategory,
    pub confidence: f64,
    pub queue_lengths: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionReason {
    EdgeCode,
    EdgeMath,
    EdgeGeneral,
    CloudComplex,
    CloudFallbackQueue,
    /// Looked up from an assignment genome.
    Direct,
    Baseline,
}

impl DecisionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionReason::EdgeCode => "edge_code",
            DecisionReason::EdgeMath => "edge_math",
            DecisionReason::EdgeGeneral => "edge_general",
            DecisionReason::CloudComplex => "cloud_complex",
            DecisionReason::CloudFallbackQueue => "cloud_fallback_queue",
            DecisionReason::Direct => "direct",
            DecisionReason::Baseline => "baseline",
        }
    }
}

impl fmt::Display for DecisionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub pair: NodePair,
    pub reason: DecisionReason,
}

/// Anything that maps a request to a `(node, model)` pair.
///
/// Only round robin and edge-only keep state (their cursor); the simulator
/// calls `route` from a single dispatcher, so `&mut self` is enough.
pub trait Router: Send {
    fn name(&self) -> &str;

    fn route(
        &mut self,
        request: &InferenceRequest,
        state: &SystemState,
        topology: &Topology,
    ) -> Result<RoutingDecision>;
}

/// Everything the threshold router needs beyond the request itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdContext<'a> {
    pub classifier: &'a ClassifierConfig,
    pub complexity: &'a ComplexityConfig,
    pub seed: u64,
    pub high_capacity: NodePair,
}

pub fn extract_features(
    request: &InferenceRequest,
    state: &SystemState,
    ctx: &ThresholdContext<'_>,
) -> FeatureVector {
    let (predicted_category, confidence) = classify_task(request, ctx.classifier, ctx.seed);
    FeatureVector {
        complexity: complexity_score(request, predicted_category, ctx.complexity),
        predicted_category,
        confidence,
        queue_lengths: state.queue_lengths.clone(),
    }
}

/// The threshold decision for already extracted features.
pub fn decide(
    features: &FeatureVector,
    genome: &ThresholdGenome,
    topology: &Topology,
    high_capacity: NodePair,
) -> RoutingDecision {
    let c = features.complexity;
    let t = features.predicted_category;
    let reason = if t == RequestCategory::Code && c < genome.d_code {
        DecisionReason::EdgeCode
    } else if t == RequestCategory::Math && c < genome.d_math {
        DecisionReason::EdgeMath
    } else if c < genome.d_general {
        DecisionReason::EdgeGeneral
    } else {
        return RoutingDecision {
            pair: high_capacity,
            reason: DecisionReason::CloudComplex,
        };
    };

    let candidates: Vec<usize> = topology
        .edge_nodes()
        .filter(|&j| features.queue_lengths.get(j).copied().unwrap_or(0) <= genome.q_limit)
        .collect();
    if candidates.is_empty() {
        return RoutingDecision {
            pair: high_capacity,
            reason: DecisionReason::CloudFallbackQueue,
        };
    }

    let p = features.confidence;
    let kind = if t == RequestCategory::Code && p >= genome.t_code {
        ModelKind::Coder
    } else if t == RequestCategory::Math && p >= genome.t_math {
        ModelKind::Math
    } else {
        ModelKind::Instruct
    };
    RoutingDecision {
        pair: pick_on(topology, &candidates, kind),
        reason,
    }
}

/// First candidate hosting `kind`; if none does, first one hosting an
/// instruct model; failing that, the first candidate's first model.
fn pick_on(topology: &Topology, candidates: &[usize], kind: ModelKind) -> NodePair {
    for k in [kind, ModelKind::Instruct] {
        if let Some(pair) = candidates.iter().find_map(|&node| {
            topology
                .model_of_kind(node, k)
                .map(|model| NodePair { node, model })
        }) {
            return pair;
        }
    }
    let node = candidates[0];
    NodePair {
        node,
        model: topology.deployed(node)[0],
    }
}

/// Runtime threshold routing as a pure function of its inputs.
pub fn route_threshold(
    request: &InferenceRequest,
    genome: &ThresholdGenome,
    state: &SystemState,
    topology: &Topology,
    ctx: &ThresholdContext<'_>,
) -> RoutingDecision {
    let features = extract_features(request, state, ctx);
    decide(&features, genome, topology, ctx.high_capacity)
}

/// Threshold policy bound to one topology.
#[derive(Debug, Clone)]
pub struct ThresholdRouter {
    name: String,
    pub genome: ThresholdGenome,
    pub classifier: ClassifierConfig,
    pub complexity: ComplexityConfig,
    pub seed: u64,
    high_capacity: NodePair,
}

impl ThresholdRouter {
    pub fn new(
        topology: &Topology,
        genome: ThresholdGenome,
        classifier: ClassifierConfig,
        complexity: ComplexityConfig,
        seed: u64,
    ) -> Result<Self> {
        classifier.validate()?;
        complexity.validate()?;
        Ok(ThresholdRouter {
            name: "proposed".into(),
            genome,
            classifier,
            complexity,
            seed,
            high_capacity: topology.high_capacity_pair()?,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn context(&self) -> ThresholdContext<'_> {
        ThresholdContext {
            classifier: &self.classifier,
            complexity: &self.complexity,
            seed: self.seed,
            high_capacity: self.high_capacity,
        }
    }
}

impl Router for ThresholdRouter {
    fn name(&self) -> &str {
        &self.name
    }

    fn route(
        &mut self,
        request: &InferenceRequest,
        state: &SystemState,
        topology: &Topology,
    ) -> Result<RoutingDecision> {
        Ok(route_threshold(request, &self.genome, state, topology, &self.context()))
    }
}

pub fn route_assignment(request: &InferenceRequest, genome: &AssignmentGenome) -> Result<RoutingDecision> {
    let pair = usize::try_from(request.id)
        .ok()
        .and_then(|i| genome.assignments.get(i))
        .ok_or_else(|| {
            Error::Domain(format!(
                "request id {} outside assignment of length {}",
                request.id,
                genome.len()
            ))
        })?;
    Ok(RoutingDecision {
        pair: *pair,
        reason: DecisionReason::Direct,
    })
}

/// Replays a fixed per-request assignment.
#[derive(Debug, Clone)]
pub struct AssignmentRouter {
    name: String,
    pub genome: AssignmentGenome,
}

impl AssignmentRouter {
    pub fn new(topology: &Topology, genome: AssignmentGenome) -> Result<Self> {
        if let Some(i) = genome.assignments.iter().position(|&p| !topology.contains(p)) {
            return Err(Error::Config(format!("assignment {i} is not a deployed pair")));
        }
        Ok(AssignmentRouter {
            name: "assignment".into(),
            genome,
        })
    }
}

impl Router for AssignmentRouter {
    fn name(&self) -> &str {
        &self.name
    }

    fn route(&mut self, request: &InferenceRequest, _: &SystemState, _: &Topology) -> Result<RoutingDecision> {
        route_assignment(request, &self.genome)
    }
}

/// The four reference strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    CloudOnly,
    EdgeOnly,
    Random,
    RoundRobin,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [
        Baseline::CloudOnly,
        Baseline::EdgeOnly,
        Baseline::Random,
        Baseline::RoundRobin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::CloudOnly => "cloud_only",
            Baseline::EdgeOnly => "edge_only",
            Baseline::Random => "random",
            Baseline::RoundRobin => "round_robin",
        }
    }

    pub fn build(self, topology: &Topology, seed: u64) -> Result<BaselineRouter> {
        BaselineRouter::new(self, topology, seed)
    }
}

impl std::str::FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown baseline router `{s}`")))
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct BaselineRouter {
    kind: Baseline,
    seed: u64,
    cursor: usize,
    /// Nodes the cursor cycles over.
    cycle: Vec<usize>,
    high_capacity: Option<NodePair>,
}

impl BaselineRouter {
    pub fn new(kind: Baseline, topology: &Topology, seed: u64) -> Result<Self> {
        let (cycle, high_capacity) = match kind {
            Baseline::CloudOnly => (Vec::new(), Some(topology.high_capacity_pair()?)),
            Baseline::EdgeOnly => {
                let edges: Vec<usize> = topology.edge_nodes().collect();
                if edges.is_empty() {
                    return Err(Error::Config("edge_only needs at least one edge node".into()));
                }
                (edges, None)
            }
            Baseline::Random => (Vec::new(), None),
            Baseline::RoundRobin => ((0..topology.nodes().len()).collect(), None),
        };
        Ok(BaselineRouter {
            kind,
            seed,
            cursor: 0,
            cycle,
            high_capacity,
        })
    }

    pub fn kind(&self) -> Baseline {
        self.kind
    }

    fn next_node(&mut self) -> usize {
        let node = self.cycle[self.cursor % self.cycle.len()];
        self.cursor += 1;
        node
    }
}

/// Model for `category` on `node`: the large model on cloud nodes, the
/// category specialist on edge nodes, instruct or the first deployment as
/// fallbacks.
fn model_for(topology: &Topology, node: usize, category: RequestCategory) -> usize {
    let preferred = match topology.node(node).tier {
        Tier::Cloud => ModelKind::Large,
        Tier::Edge => category.specialist_kind(),
    };
    topology
        .model_of_kind(node, preferred)
        .or_else(|| topology.model_of_kind(node, ModelKind::Instruct))
        .unwrap_or(topology.deployed(node)[0])
}

impl Router for BaselineRouter {
    fn name(&self) -> &str {
        self.kind.as_str()
    }

    fn route(&mut self, request: &InferenceRequest, _: &SystemState, topology: &Topology) -> Result<RoutingDecision> {
        let pair = match self.kind {
            Baseline::CloudOnly => self.high_capacity.expect("resolved at construction"),
            Baseline::EdgeOnly | Baseline::RoundRobin => {
                let node = self.next_node();
                NodePair {
                    node,
                    model: model_for(topology, node, request.category),
                }
            }
            Baseline::Random => {
                let space = topology.solution_space();
                let mut rng = rng::stream(&[self.seed, tag::RANDOM_ROUTER, request.id]);
                space[rng.random_range(0..space.len())]
            }
        };
        Ok(RoutingDecision {
            pair,
            reason: DecisionReason::Baseline,
        })
    }
}
