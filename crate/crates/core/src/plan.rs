//! Serializable plan documents: the durable output of a planning run,
//! designed for byte-deterministic round trips.
//!
//! A document pins schema version `"v1"`, a provenance block (SHA-256
//! digests of the exact model and profile texts, the planner version, and
//! the sweep wall time), the chosen configuration, and the per-layer /
//! per-stage breakdown. Two runs over the same inputs produce identical
//! documents modulo the provenance wall-time field, which is the single
//! volatile quantity retained; [`PlanDocument::normalized`] zeroes it for
//! byte-level comparisons.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cost::{build_cost_matrices, PlanContext, Precision};
use crate::graph::ComputationGraph;
use crate::miqp::{build_miqp, build_qip};
use crate::sim::{relative_error, simulate_gpipe, stage_times_from, EventTrace};
use crate::solver::{check_assignment, direct_eval, Assignment, Violation};
use crate::uop::ParallelPlan;
use crate::Result;

/// Current plan document schema version.
pub const PLAN_SCHEMA: &str = "v1";

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Where the plan came from: exact input digests, the planner build, and
/// how long planning took. Wall time is the only field two runs over
/// identical inputs may disagree on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the model JSON text the plan was computed from.
    pub model_digest: String,
    /// SHA-256 of the profile JSON text.
    pub profile_digest: String,
    /// Version of the planner crate that produced the document.
    pub planner_version: String,
    /// Wall-clock seconds the sweep took.
    pub wall_time_s: f64,
}

/// Where a layer landed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAssignment {
    pub id: usize,
    pub kind: String,
    pub stage: usize,
    /// Data-parallel width within the stage.
    pub dp: u32,
    /// Tensor-parallel width within the stage.
    pub tp: u32,
    /// Whether the data-parallel replicas shard parameters.
    pub fsdp: bool,
}

/// One pipeline stage of the plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub index: usize,
    pub layers: Vec<usize>,
    /// Device ranks assigned to the stage.
    pub devices: Vec<u32>,
    /// Per-micro-batch computation seconds.
    pub compute_s: f64,
    pub memory_bytes: f64,
}

/// One boundary between adjacent stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySummary {
    pub index: usize,
    /// Per-micro-batch transfer seconds charged to the boundary.
    pub comm_s: f64,
}

/// The full, self-describing plan document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub schema: String,
    pub provenance: Provenance,
    pub precision: Precision,
    pub mini_batch: u64,
    pub devices: u32,
    pub stage_count: u32,
    pub micro_batches: u32,
    pub micro_batch_size: u64,
    pub per_stage_devices: u32,
    /// Estimated seconds per training iteration.
    pub tpi_estimate_s: f64,
    pub layers: Vec<LayerAssignment>,
    pub stages: Vec<StageSummary>,
    pub boundaries: Vec<BoundarySummary>,
}

impl PlanDocument {
    /// Assemble a document from a sweep winner. `model_text` and
    /// `profile_text` are the exact input texts (digested verbatim);
    /// `wall_time_s` is the planning wall time recorded in the provenance
    /// block.
    #[allow(clippy::too_many_arguments)]
    pub fn from_plan(
        plan: &ParallelPlan,
        graph: &ComputationGraph,
        model_text: &str,
        profile_text: &str,
        mini_batch: u64,
        devices: u32,
        precision: Precision,
        wall_time_s: f64,
    ) -> Self {
        let layers = graph
            .nodes
            .iter()
            .enumerate()
            .map(|(u, node)| LayerAssignment {
                id: node.id,
                kind: node.kind.clone(),
                stage: plan.stage_of[u],
                dp: plan.strategies[u].dp,
                tp: plan.strategies[u].tp,
                fsdp: plan.strategies[u].fsdp_shard,
            })
            .collect();
        let g = plan.per_stage_devices;
        let stages = (0..plan.deg as usize)
            .map(|i| StageSummary {
                index: i,
                layers: (0..graph.nodes.len())
                    .filter(|&u| plan.stage_of[u] == i)
                    .collect(),
                devices: (i as u32 * g..(i as u32 + 1) * g).collect(),
                compute_s: plan.stage_costs[i],
                memory_bytes: plan.stage_memory[i],
            })
            .collect();
        let boundaries = plan
            .boundary_costs
            .iter()
            .enumerate()
            .map(|(j, &comm_s)| BoundarySummary { index: j, comm_s })
            .collect();
        PlanDocument {
            schema: PLAN_SCHEMA.to_string(),
            provenance: Provenance {
                model_digest: sha256_hex(model_text.as_bytes()),
                profile_digest: sha256_hex(profile_text.as_bytes()),
                planner_version: env!("CARGO_PKG_VERSION").to_string(),
                wall_time_s,
            },
            precision,
            mini_batch,
            devices,
            stage_count: plan.deg,
            micro_batches: plan.c,
            micro_batch_size: plan.micro_batch,
            per_stage_devices: plan.per_stage_devices,
            tpi_estimate_s: plan.tpi_estimate_s,
            layers,
            stages,
            boundaries,
        }
    }

    /// Pretty-printed JSON with a fixed field order; identical documents
    /// serialize to identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan document serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// A copy with the provenance wall time zeroed, for comparing documents
    /// from separate runs over the same inputs.
    pub fn normalized(&self) -> Self {
        let mut doc = self.clone();
        doc.provenance.wall_time_s = 0.0;
        doc
    }
}

/// Outcome of rechecking a plan document against its inputs: structural
/// violations (empty means the plan is valid), the recomputed objective, the
/// simulated schedule, and how closely the estimate tracked the simulation.
#[derive(Debug, Clone)]
pub struct Revalidation {
    pub violations: Vec<Violation>,
    /// Objective recomputed from the document's stage and strategy choices.
    pub estimate_s: f64,
    /// Full simulated schedule of the documented plan.
    pub trace: EventTrace,
    /// `|makespan - estimate| / makespan * 100`.
    pub ree_percent: f64,
    /// Whether the supplied model text hashes to the recorded digest.
    pub model_digest_matches: bool,
    /// Whether the supplied profile text hashes to the recorded digest.
    pub profile_digest_matches: bool,
}

/// Recheck `doc` against the model and profile texts it claims to have been
/// planned from: rebuild the optimization model, verify every constraint the
/// solver enforced, recompute the objective, and simulate the schedule.
///
/// Digest mismatches are reported, not fatal: the caller may legitimately
/// revalidate against edited inputs. Structural impossibilities (wrong device
/// count, unknown schema, malformed layer records) are errors.
pub fn revalidate(doc: &PlanDocument, model_text: &str, profile_text: &str) -> Result<Revalidation> {
    if doc.schema != PLAN_SCHEMA {
        return Err(crate::Error::Schema {
            field: "schema".to_string(),
            message: format!("unsupported plan schema {:?} (expected {PLAN_SCHEMA:?})", doc.schema),
        });
    }
    let graph = ComputationGraph::from_json(model_text)?;
    let profile = crate::profile::load_profile(profile_text)?;
    if doc.devices != profile.n {
        return Err(crate::Error::InvalidInput(format!(
            "plan was made for {} devices but the profile describes {}",
            doc.devices, profile.n
        )));
    }

    let ctx = PlanContext::new(
        doc.stage_count,
        doc.micro_batches,
        doc.mini_batch,
        profile.n,
        doc.precision,
    )?;
    let costs = build_cost_matrices(&graph, &profile, &ctx)?;
    let limits = crate::uop::stage_memory_limits(&profile, doc.stage_count);
    let model = if doc.stage_count == 1 {
        build_qip(&costs, &graph, limits[0])?
    } else {
        build_miqp(&costs, &graph, &ctx, &limits)?
    };

    let assignment = assignment_from_doc(doc, &graph, &costs.strategies.strategies)?;
    let violations = check_assignment(&model, &assignment)?;

    let eval = direct_eval(&model, &assignment.stage_of, &assignment.strategy_of);
    let times = stage_times_from(&eval.p, &eval.o);
    let trace = simulate_gpipe(&times, model.c)?;
    let ree_percent = relative_error(trace.makespan, eval.objective);

    Ok(Revalidation {
        violations,
        estimate_s: eval.objective,
        ree_percent,
        model_digest_matches: sha256_hex(model_text.as_bytes()) == doc.provenance.model_digest,
        profile_digest_matches: sha256_hex(profile_text.as_bytes()) == doc.provenance.profile_digest,
        trace,
    })
}

/// Reconstruct the solver-level assignment from the document's per-layer
/// records. Fails when the document does not describe every layer exactly
/// once or names a strategy outside the configuration's space.
fn assignment_from_doc(
    doc: &PlanDocument,
    graph: &ComputationGraph,
    strategies: &[crate::graph::IntraStrategy],
) -> Result<Assignment> {
    let v = graph.nodes.len();
    if doc.layers.len() != v {
        return Err(crate::Error::Schema {
            field: "layers".to_string(),
            message: format!("plan lists {} layers, model has {v}", doc.layers.len()),
        });
    }
    let mut stage_of = vec![usize::MAX; v];
    let mut strategy_of = vec![0usize; v];
    for layer in &doc.layers {
        if layer.id >= v || stage_of[layer.id] != usize::MAX {
            return Err(crate::Error::Schema {
                field: "layers".to_string(),
                message: format!("plan entry for layer {} is out of range or repeated", layer.id),
            });
        }
        stage_of[layer.id] = layer.stage;
        strategy_of[layer.id] = strategies
            .iter()
            .position(|s| s.dp == layer.dp && s.tp == layer.tp && s.fsdp_shard == layer.fsdp)
            .ok_or_else(|| crate::Error::Schema {
                field: "layers".to_string(),
                message: format!(
                    "layer {}: strategy (dp={}, tp={}, fsdp={}) is not available with {} \
                     device(s) per stage",
                    layer.id, layer.dp, layer.tp, layer.fsdp, doc.per_stage_devices
                ),
            })?;
    }
    Ok(Assignment {
        stage_of,
        strategy_of,
        objective: doc.tpi_estimate_s,
        stage_costs: doc.stages.iter().map(|s| s.compute_s).collect(),
        boundary_costs: doc.boundaries.iter().map(|b| b.comm_s).collect(),
        stage_memory: doc.stages.iter().map(|s| s.memory_bytes).collect(),
    })
}
