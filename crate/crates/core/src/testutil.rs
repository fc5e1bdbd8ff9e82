//! Shared helpers for unit tests. Compiled only under `cfg(test)`.

use crate::graph::{ComputationGraph, EdgeInfo, LayerNode};

/// Minimal well-formed chain graph with `len` layers, profiled for every
/// power-of-two TP size up to 16 so it works with any group size used in
/// tests.
pub(crate) fn chain_graph(len: usize) -> ComputationGraph {
    chain_graph_tp(len, &[1, 2, 4, 8, 16])
}

/// Chain graph profiled for each TP size in `tps` (time and activation
/// tables scale down with TP so monotonicity holds).
pub(crate) fn chain_graph_tp(len: usize, tps: &[u32]) -> ComputationGraph {
    let nodes = (0..len)
        .map(|id| LayerNode {
            id,
            kind: "encoder".to_string(),
            fwd_time_per_sample: tps.iter().map(|&tp| (tp, 0.01 / tp as f64)).collect(),
            param_bytes: 1e6,
            act_bytes_per_sample: tps.iter().map(|&tp| (tp, 1e4 / tp as f64)).collect(),
            ctx_bytes: 0.0,
            tp_comm_bytes_per_sample: 0.0,
        })
        .collect();
    let edges = (0..len.saturating_sub(1))
        .map(|i| EdgeInfo {
            src: i,
            dst: i + 1,
            tensor_bytes_per_sample: 1e4,
        })
        .collect();
    ComputationGraph { nodes, edges }
}

/// The four-node diamond 0 -> {1, 2} -> 3, profiled for TP size 1.
pub(crate) fn diamond_graph() -> ComputationGraph {
    let mut g = chain_graph(4);
    g.edges = [(0, 1), (0, 2), (1, 3), (2, 3)]
        .into_iter()
        .map(|(src, dst)| EdgeInfo {
            src,
            dst,
            tensor_bytes_per_sample: 1e4,
        })
        .collect();
    g
}
