//! Exact planning of hybrid parallelism for layered deep-learning models.
//!
//! Given a profiled computation graph (per-layer forward times, parameter and
//! activation sizes, inter-layer tensor volumes) and a cluster description
//! (device count, memory, collective/P2P bandwidth, overlap coefficient), the
//! planner searches over
//!
//! * pipeline degree `deg` (how many sequential stages the layer graph is cut
//!   into),
//! * micro-batch count `c` (how a mini-batch of `B` samples is split into
//!   `b = B / c` sized micro-batches flowing through the pipeline), and
//! * one intra-layer strategy per layer (data parallelism, tensor parallelism,
//!   and optionally FSDP-style sharding of model states),
//!
//! to minimize the estimated time per training iteration of a GPipe-style
//! synchronous pipeline. The inner problem for one `(deg, c)` configuration is
//! a quadratic integer program over binary placement/strategy matrices; it is
//! solved exactly by a combinatorial branch-and-bound search and can also be
//! linearized and exported in CPLEX LP text format for external solvers.
//!
//! Module map:
//!
//! * [`graph`] — computation graph, strategy spaces, contiguity predicate.
//! * [`profile`] — cluster profile and communication/overlap time primitives.
//! * [`cost`] — the per-configuration cost matrices `A`, `R`, `R'`, `M`.
//! * [`miqp`] — quadratic model construction, linearization, LP export.
//! * [`solver`] — exact branch-and-bound plus an exhaustive oracle.
//! * [`uop`] — the outer sweep over `(deg, c)` configurations.
//! * [`sim`] — discrete-event simulation of the GPipe schedule.
//! * [`plan`] — serializable plan documents with provenance.
//!
//! The crate is deliberately self-contained: no external LP or MIP solver is
//! required, and every numeric decision (ring all-reduce factors, the 2x
//! backward/forward rule, infeasibility sentinels) is documented on the item
//! that implements it.

// Dense index arithmetic over parallel matrices (closures, cost tables,
// variable layouts) reads better with explicit indices than iterator chains.
#![allow(clippy::needless_range_loop)]

pub mod cost;
pub mod graph;
pub mod miqp;
pub mod plan;
pub mod profile;
pub mod sim;
pub mod solver;
#[cfg(test)]
pub(crate) mod testutil;
pub mod uop;

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by how the CLI maps them to exit codes: schema and
/// input problems (exit 1), global infeasibility (exit 2), I/O failures
/// (exit 4). Constraint violations found by validation are *data*
/// ([`solver::Violation`]), not errors.
#[derive(Debug, Error)]
pub enum Error {
    /// A document failed schema validation; `field` names the offender.
    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    /// JSON parsing failed.
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    /// An argument or in-process input was invalid.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation was called outside its supported regime
    /// (e.g. the pipeline model builder with a single stage).
    #[error("misuse: {0}")]
    Misuse(String),

    /// The exhaustive oracle refused an instance larger than its guard.
    #[error("instance exceeds oracle guard: {0}")]
    GuardExceeded(String),

    /// A layer has no strategy with finite memory cost.
    #[error("no feasible strategy for layer {layer}")]
    NoFeasibleStrategy { layer: usize },

    /// Every (deg, c) configuration was infeasible.
    #[error("{0}")]
    Infeasible(uop::InfeasibilityReport),

    /// An I/O operation failed.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
