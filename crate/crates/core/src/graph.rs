//! Computation graph, intra-layer strategy spaces, and the contiguity
//! predicate that underlies the pipeline order-preserving constraint.
//!
//! A model is a DAG of profiled layers. Layer ids double as topological
//! indices: node `k` sits at position `k` of [`ComputationGraph::nodes`] and
//! every edge points from a smaller id to a larger one. The planner rejects
//! anything else up front so that downstream code can treat id order and
//! topological order as the same thing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One profiled layer of the model.
///
/// Time and byte quantities are per *sample*; the cost model scales them by
/// the micro-batch size. Maps keyed by tensor-parallel size must contain an
/// entry for every TP size the strategy space can request (checked when cost
/// matrices are built, because the relevant TP sizes depend on the per-stage
/// device count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNode {
    /// Unique ordinal; also the layer's position in topological order.
    pub id: usize,
    /// Free-form layer-type tag (e.g. `"encoder"`). Carries no semantics:
    /// layers of the same kind may still receive different strategies.
    pub kind: String,
    /// Forward compute seconds per sample, keyed by TP size.
    pub fwd_time_per_sample: BTreeMap<u32, f64>,
    /// Bytes of learnable parameters in the training dtype (symbol `ps`).
    pub param_bytes: f64,
    /// Activation bytes per sample held for the backward pass, keyed by TP size.
    pub act_bytes_per_sample: BTreeMap<u32, f64>,
    /// Fixed per-device context bytes (workspace, kernels; symbol `m_c`).
    pub ctx_bytes: f64,
    /// Bytes of tensor-parallel collective traffic per sample per forward pass.
    pub tp_comm_bytes_per_sample: f64,
}

/// A dataflow edge `src -> dst` with the activation volume crossing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeInfo {
    pub src: usize,
    pub dst: usize,
    /// Bytes of activation crossing the edge per sample.
    pub tensor_bytes_per_sample: f64,
}

/// The layered model: nodes in topological order plus dataflow edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputationGraph {
    #[serde(rename = "layers")]
    pub nodes: Vec<LayerNode>,
    pub edges: Vec<EdgeInfo>,
}

/// One intra-layer parallelization strategy for a stage of `dp * tp` devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntraStrategy {
    /// Data-parallel degree (>= 1). Samples are split `dp` ways.
    pub dp: u32,
    /// Tensor-parallel degree (>= 1, power of two). Tensors are split `tp` ways.
    pub tp: u32,
    /// When set, the `dp` axis also shards model states (FSDP), i.e. the
    /// sharding size `fs` equals `dp`; otherwise `fs = 1`. Requires `dp >= 2`.
    pub fsdp_shard: bool,
}

impl IntraStrategy {
    /// The model-state sharding factor `fs` (Eq-style symbol): `dp` under
    /// FSDP, else 1.
    pub fn fs(&self) -> u32 {
        if self.fsdp_shard {
            self.dp
        } else {
            1
        }
    }

    /// Two strategies induce the same activation layout iff they split the
    /// batch and the tensors identically; FSDP only changes how *model
    /// states* are stored, not activations.
    pub fn same_layout(&self, other: &IntraStrategy) -> bool {
        self.dp == other.dp && self.tp == other.tp
    }

    /// Short human-readable tag, e.g. `dp2·tp1·fsdp`.
    pub fn tag(&self) -> String {
        if self.fsdp_shard {
            format!("dp{}·tp{}·fsdp", self.dp, self.tp)
        } else {
            format!("dp{}·tp{}", self.dp, self.tp)
        }
    }
}

/// The ordered strategy set shared by all layers of one per-stage device
/// count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpace {
    pub per_stage_devices: u32,
    pub strategies: Vec<IntraStrategy>,
}

impl StrategySpace {
    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }
}

/// Enumerate every intra-layer strategy for a stage of `per_stage_devices`
/// devices.
///
/// The rule: every factorization `dp * tp = g` with `tp` a power of two
/// dividing `g`, each in a plain variant and — when `dp >= 2` — an FSDP
/// variant. The list is sorted ascending by `(dp, tp, fsdp_shard)`, so the
/// pure tensor-parallel strategy comes first and pure (possibly sharded)
/// data parallelism last.
///
/// Cardinality is fixed by `g`: 1 for `g = 1`, and `2k + 1` for `g = 2^k`
/// (the `k + 1` power-of-two splits, of which the `k` with `dp >= 2` gain an
/// FSDP twin).
pub fn enumerate_strategies(per_stage_devices: u32) -> StrategySpace {
    assert!(per_stage_devices >= 1, "per_stage_devices must be >= 1");
    let g = per_stage_devices;
    let mut strategies = Vec::new();
    let mut tp = 1u32;
    while tp <= g {
        if g.is_multiple_of(tp) {
            let dp = g / tp;
            strategies.push(IntraStrategy {
                dp,
                tp,
                fsdp_shard: false,
            });
            if dp >= 2 {
                strategies.push(IntraStrategy {
                    dp,
                    tp,
                    fsdp_shard: true,
                });
            }
        }
        match tp.checked_mul(2) {
            Some(next) => tp = next,
            None => break,
        }
    }
    strategies.sort();
    StrategySpace {
        per_stage_devices,
        strategies,
    }
}

/// A structural problem found by [`validate_graph`]. Violations are data,
/// not errors: callers decide whether to reject the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GraphViolation {
    /// The graph has no layers.
    Empty,
    /// Node at position `position` carries `id` instead of its ordinal.
    IdMismatch { position: usize, id: usize },
    /// An edge endpoint names a node that does not exist.
    UnknownEndpoint { src: usize, dst: usize },
    /// An edge points backwards or sideways in the node order.
    TopologicalOrder { src: usize, dst: usize },
    /// An edge from a node to itself.
    SelfLoop { id: usize },
    /// The same (src, dst) pair appears twice.
    DuplicateEdge { src: usize, dst: usize },
    /// The graph is not weakly connected.
    Disconnected,
    /// A byte/time field is negative.
    NegativeField { id: usize, field: String },
    /// A byte/time field is NaN or infinite.
    NonFiniteField { id: usize, field: String },
}

impl std::fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphViolation::Empty => write!(f, "graph has no layers"),
            GraphViolation::IdMismatch { position, id } => write!(
                f,
                "node at position {position} has id {id}; ids must equal their topological position"
            ),
            GraphViolation::UnknownEndpoint { src, dst } => {
                write!(f, "edge ({src}, {dst}) references an unknown node")
            }
            GraphViolation::TopologicalOrder { src, dst } => {
                write!(f, "edge ({src}, {dst}) violates topological order")
            }
            GraphViolation::SelfLoop { id } => write!(f, "self-loop on node {id}"),
            GraphViolation::DuplicateEdge { src, dst } => {
                write!(f, "duplicate edge ({src}, {dst})")
            }
            GraphViolation::Disconnected => write!(f, "graph is not weakly connected"),
            GraphViolation::NegativeField { id, field } => {
                write!(f, "node {id}: field `{field}` is negative")
            }
            GraphViolation::NonFiniteField { id, field } => {
                write!(f, "node {id}: field `{field}` is not finite")
            }
        }
    }
}

/// Check every structural invariant of a [`ComputationGraph`].
///
/// Returns an empty list iff the graph is well-formed: ids equal positions,
/// edges point forward with no self-loops or duplicates, the graph is weakly
/// connected (single-node graphs count as connected), and all numeric fields
/// are non-negative and finite.
pub fn validate_graph(graph: &ComputationGraph) -> Vec<GraphViolation> {
    let mut out = Vec::new();
    let n = graph.nodes.len();
    if n == 0 {
        out.push(GraphViolation::Empty);
        return out;
    }
    for (position, node) in graph.nodes.iter().enumerate() {
        if node.id != position {
            out.push(GraphViolation::IdMismatch {
                position,
                id: node.id,
            });
        }
        let mut check = |value: f64, field: &str| {
            if value.is_nan() || value.is_infinite() {
                out.push(GraphViolation::NonFiniteField {
                    id: node.id,
                    field: field.to_string(),
                });
            } else if value < 0.0 {
                out.push(GraphViolation::NegativeField {
                    id: node.id,
                    field: field.to_string(),
                });
            }
        };
        check(node.param_bytes, "param_bytes");
        check(node.ctx_bytes, "ctx_bytes");
        check(node.tp_comm_bytes_per_sample, "tp_comm_bytes_per_sample");
        for (tp, v) in &node.fwd_time_per_sample {
            check(*v, &format!("fwd_time_per_sample[{tp}]"));
        }
        for (tp, v) in &node.act_bytes_per_sample {
            check(*v, &format!("act_bytes_per_sample[{tp}]"));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for e in &graph.edges {
        if e.src >= n || e.dst >= n {
            out.push(GraphViolation::UnknownEndpoint {
                src: e.src,
                dst: e.dst,
            });
            continue;
        }
        if e.src == e.dst {
            out.push(GraphViolation::SelfLoop { id: e.src });
            continue;
        }
        if e.src > e.dst {
            out.push(GraphViolation::TopologicalOrder {
                src: e.src,
                dst: e.dst,
            });
        }
        if !seen.insert((e.src, e.dst)) {
            out.push(GraphViolation::DuplicateEdge {
                src: e.src,
                dst: e.dst,
            });
        }
        if e.tensor_bytes_per_sample < 0.0 || !e.tensor_bytes_per_sample.is_finite() {
            out.push(if e.tensor_bytes_per_sample.is_finite() {
                GraphViolation::NegativeField {
                    id: e.src,
                    field: format!("edge ({}, {}) tensor_bytes_per_sample", e.src, e.dst),
                }
            } else {
                GraphViolation::NonFiniteField {
                    id: e.src,
                    field: format!("edge ({}, {}) tensor_bytes_per_sample", e.src, e.dst),
                }
            });
        }
    }
    // Weak connectivity over the undirected view of valid edges.
    if n > 1 {
        let mut adj = vec![Vec::new(); n];
        for e in &graph.edges {
            if e.src < n && e.dst < n && e.src != e.dst {
                adj[e.src].push(e.dst);
                adj[e.dst].push(e.src);
            }
        }
        let mut visited = vec![false; n];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    stack.push(v);
                }
            }
        }
        if visited.iter().any(|v| !v) {
            out.push(GraphViolation::Disconnected);
        }
    }
    out
}

impl ComputationGraph {
    /// Parse a model document and reject it unless [`validate_graph`] is clean.
    pub fn from_json(text: &str) -> Result<Self> {
        let graph: ComputationGraph = serde_json::from_str(text)?;
        let violations = validate_graph(&graph);
        if let Some(first) = violations.first() {
            return Err(Error::Schema {
                field: "layers/edges".to_string(),
                message: format!("{first} ({} violation(s) total)", violations.len()),
            });
        }
        Ok(graph)
    }

    pub fn num_layers(&self) -> usize {
        self.nodes.len()
    }

    /// True if the graph is a simple path `0 -> 1 -> ... -> n-1`.
    pub fn is_chain(&self) -> bool {
        let n = self.nodes.len();
        self.edges.len() == n.saturating_sub(1)
            && self
                .edges
                .iter()
                .enumerate()
                .all(|(i, e)| e.src == i && e.dst == i + 1)
    }

    /// Boolean reachability matrix: `reach[u][v]` iff a directed path of
    /// length >= 1 leads from `u` to `v`. Brute-force transitive closure;
    /// graphs are model-layer-scale, so clarity beats asymptotics.
    pub fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        let mut reach = vec![vec![false; n]; n];
        for e in &self.edges {
            if e.src < n && e.dst < n {
                reach[e.src][e.dst] = true;
            }
        }
        // Floyd–Warshall style closure.
        for k in 0..n {
            for u in 0..n {
                if reach[u][k] {
                    for v in 0..n {
                        if reach[k][v] {
                            reach[u][v] = true;
                        }
                    }
                }
            }
        }
        reach
    }
}

/// Decide whether `subset` is contiguous in `graph`.
///
/// A set `W` is *non*-contiguous iff there exist `u ∈ W`, `v ∉ W`, `w ∈ W`
/// with `v` reachable from `u` and `w` reachable from `v` — an outside node
/// sitting on a path between two inside nodes. Contiguous stage sets are what
/// keeps a pipeline cut well-ordered.
pub fn is_contiguous(graph: &ComputationGraph, subset: &[usize]) -> Result<bool> {
    let n = graph.nodes.len();
    let mut inside = vec![false; n];
    for &id in subset {
        if id >= n {
            return Err(Error::InvalidInput(format!(
                "unknown layer id {id} in contiguity query (graph has {n} layers)"
            )));
        }
        inside[id] = true;
    }
    let reach = graph.reachability();
    for v in 0..n {
        if inside[v] {
            continue;
        }
        let entered = (0..n).any(|u| inside[u] && reach[u][v]);
        if !entered {
            continue;
        }
        let exits = (0..n).any(|w| inside[w] && reach[v][w]);
        if exits {
            return Ok(false);
        }
    }
    Ok(true)
}
