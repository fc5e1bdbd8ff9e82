//! Shared builders for the integration test suites.
#![allow(dead_code)] // each test binary uses a different subset

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use uniplan_core::graph::{ComputationGraph, EdgeInfo, LayerNode};

/// A well-formed chain with per-TP tables for every power of two up to 16.
pub fn chain_graph(len: usize) -> ComputationGraph {
    let nodes = (0..len).map(|id| layer(id, 0.01, 1e6, 1e4)).collect();
    let edges = (0..len.saturating_sub(1))
        .map(|i| EdgeInfo {
            src: i,
            dst: i + 1,
            tensor_bytes_per_sample: 1e4,
        })
        .collect();
    ComputationGraph { nodes, edges }
}

/// One layer with idealized 1/tp scaling of time and activations.
pub fn layer(id: usize, fwd1: f64, param_bytes: f64, act1: f64) -> LayerNode {
    let tps = [1u32, 2, 4, 8, 16];
    LayerNode {
        id,
        kind: "encoder".to_string(),
        fwd_time_per_sample: tps.iter().map(|&tp| (tp, fwd1 / tp as f64)).collect(),
        param_bytes,
        act_bytes_per_sample: tps.iter().map(|&tp| (tp, act1 / tp as f64)).collect(),
        ctx_bytes: 0.0,
        tp_comm_bytes_per_sample: 0.0,
    }
}

/// A random connected DAG: spine edges `i -> i+1` plus random skip edges,
/// with randomized per-layer costs.
pub fn random_dag(rng: &mut ChaCha8Rng, num_layers: usize) -> ComputationGraph {
    let mut g = random_chain(rng, num_layers);
    for src in 0..num_layers {
        for dst in (src + 2)..num_layers {
            if rng.random::<f64>() < 0.3 {
                g.edges.push(EdgeInfo {
                    src,
                    dst,
                    tensor_bytes_per_sample: rng.random_range(1e3..1e5),
                });
            }
        }
    }
    // Keep edges sorted for readability; order is free as long as ids are
    // topological.
    g.edges.sort_by_key(|e| (e.src, e.dst));
    g
}

/// A random chain (spine only) with randomized costs.
pub fn random_chain(rng: &mut ChaCha8Rng, num_layers: usize) -> ComputationGraph {
    let nodes = (0..num_layers)
        .map(|id| {
            let mut node = layer(
                id,
                rng.random_range(1e-3..5e-2),
                rng.random_range(1e5..1e7),
                rng.random_range(1e3..1e5),
            );
            node.tp_comm_bytes_per_sample = rng.random_range(0.0..1e4);
            node
        })
        .collect();
    let edges = (0..num_layers.saturating_sub(1))
        .map(|i| EdgeInfo {
            src: i,
            dst: i + 1,
            tensor_bytes_per_sample: rng.random_range(1e3..1e5),
        })
        .collect();
    ComputationGraph { nodes, edges }
}

/// Overwrite every layer's activation table with zeros and clear context
/// bytes, so memory reduces to the parameter/optimizer term.
pub fn zero_activations(graph: &mut ComputationGraph) {
    for node in &mut graph.nodes {
        let zeroed: BTreeMap<u32, f64> =
            node.act_bytes_per_sample.keys().map(|&tp| (tp, 0.0)).collect();
        node.act_bytes_per_sample = zeroed;
        node.ctx_bytes = 0.0;
    }
}
