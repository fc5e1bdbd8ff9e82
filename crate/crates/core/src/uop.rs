//! The unified optimization procedure: sweep every candidate configuration
//! (pipeline stage count x micro-batch count), solve each one exactly, and
//! return the globally best plan.
//!
//! Configurations: the single-stage layout is solved first (stage count 1,
//! all devices in one group, no micro-batching benefit, so `c = 1` and the
//! micro-batch equals the mini-batch). Then every divisor `deg >= 2` of the
//! device count is paired with every divisor `c >= 2` of the mini-batch
//! size. For `d(x)` counting all divisors of `x` including 1, that is
//! `1 + (d(n) - 1) * (d(B) - 1)` solves for `n` devices and mini-batch `B`.
//!
//! The winner is the feasible configuration with the smallest objective;
//! ties go to the smaller `(deg, c)` pair, making the result independent of
//! solve order and thread scheduling. When every configuration is
//! infeasible the sweep fails with a report of each configuration's reason.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{build_cost_matrices, PlanContext, Precision};
use crate::graph::{ComputationGraph, IntraStrategy};
use crate::miqp::{build_miqp, build_qip, MiqpModel};
use crate::profile::ClusterProfile;
use crate::solver::{
    solve_exact, Assignment, InfeasibleReason, SolveBudget, SolveStats, Termination,
};
use crate::{Error, Result};

/// All divisors of `x` that are at least 2, ascending. `factors(1)` is
/// empty, `factors(8)` is `[2, 4, 8]`, `factors(12)` is `[2, 3, 4, 6, 12]`.
pub fn factors(x: u64) -> Vec<u64> {
    (2..=x).filter(|d| x.is_multiple_of(*d)).collect()
}

/// Options for the sweep.
#[derive(Debug, Clone, Copy)]
pub struct UopOptions {
    /// Budget applied to every per-configuration solve.
    pub budget: SolveBudget,
    /// Solve the single-stage configuration first and use its objective as
    /// a cutoff for all pipeline configurations. The cutoff admits ties, so
    /// the final winner is unchanged; searches merely prune earlier.
    pub use_previous_best_cutoff: bool,
    /// Solve configurations on the rayon thread pool. Results are identical
    /// with and without parallelism.
    pub parallel: bool,
}

impl Default for UopOptions {
    fn default() -> Self {
        UopOptions {
            budget: SolveBudget::default(),
            use_previous_best_cutoff: false,
            parallel: true,
        }
    }
}

/// Outcome of one configuration's solve, kept for reporting.
#[derive(Debug, Clone)]
pub struct ConfigReport {
    pub deg: u32,
    pub c: u32,
    pub objective: Option<f64>,
    pub stats: SolveStats,
    pub reason: Option<InfeasibleReason>,
}

/// The chosen parallel plan: configuration, per-layer placement and
/// strategies, and the evaluated cost breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPlan {
    pub deg: u32,
    pub c: u32,
    pub micro_batch: u64,
    pub per_stage_devices: u32,
    /// Stage index per layer.
    pub stage_of: Vec<usize>,
    /// Resolved strategy per layer (for the winning configuration's group
    /// size).
    pub strategies: Vec<IntraStrategy>,
    /// Estimated seconds per training iteration (the solver objective).
    pub tpi_estimate_s: f64,
    /// Per-stage computation seconds.
    pub stage_costs: Vec<f64>,
    /// Per-boundary communication seconds.
    pub boundary_costs: Vec<f64>,
    /// Per-stage memory bytes.
    pub stage_memory: Vec<f64>,
}

/// Result of the full sweep: the best plan plus per-configuration reports in
/// sweep order.
#[derive(Debug, Clone)]
pub struct UopResult {
    pub plan: ParallelPlan,
    pub configs: Vec<ConfigReport>,
    pub total_wall_time_s: f64,
}

/// Why no configuration produced a plan, one entry per configuration in
/// sweep order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    pub entries: Vec<InfeasibleConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibleConfig {
    pub deg: u32,
    pub c: u32,
    /// "memory", "placement", "cutoff", or "timeout".
    pub reason: InfeasibleKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfeasibleKind {
    Memory,
    Placement,
    Cutoff,
    Timeout,
}

impl std::fmt::Display for InfeasibleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InfeasibleKind::Memory => "memory",
            InfeasibleKind::Placement => "placement",
            InfeasibleKind::Cutoff => "cutoff",
            InfeasibleKind::Timeout => "timeout",
        };
        write!(f, "{s}")
    }
}

impl std::fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} configurations tried:", self.entries.len())?;
        for e in &self.entries {
            write!(f, " deg={},c={}:{};", e.deg, e.c, e.reason)?;
        }
        Ok(())
    }
}

/// Per-stage memory limits: stage `i` runs on devices
/// `[i * g, (i + 1) * g)`, and its limit is the smallest capacity among
/// them.
/// The configurations one sweep visits, in solve order: the single-stage
/// `(1, 1)` first, then every pipeline degree dividing the device count
/// crossed with every micro-batch count dividing the mini-batch (both >= 2).
pub fn sweep_configs(n: u32, batch: u64) -> Vec<(u32, u32)> {
    let mut configs = vec![(1u32, 1u32)];
    for deg in factors(n as u64) {
        for c in factors(batch) {
            configs.push((deg as u32, c as u32));
        }
    }
    configs
}

/// Per-stage memory limits implied by a profile: stage `i` owns the
/// contiguous device slice `[i * g, (i + 1) * g)` and is limited by its
/// smallest device.
pub fn stage_memory_limits(profile: &ClusterProfile, deg: u32) -> Vec<f64> {
    let g = (profile.n / deg) as usize;
    (0..deg as usize)
        .map(|i| {
            profile.mem_bytes_per_device[i * g..(i + 1) * g]
                .iter()
                .fold(f64::INFINITY, |acc, &m| acc.min(m))
        })
        .collect()
}

/// Build the model for one configuration. `Ok(None)` means the
/// configuration is structurally infeasible (some layer has no strategy
/// that fits its micro-batch).
fn build_config_model(
    graph: &ComputationGraph,
    profile: &ClusterProfile,
    ctx: &PlanContext,
) -> Result<Option<MiqpModel>> {
    let costs = match build_cost_matrices(graph, profile, ctx) {
        Ok(c) => c,
        Err(Error::NoFeasibleStrategy { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let limits = stage_memory_limits(profile, ctx.deg);
    let model = if ctx.deg == 1 {
        build_qip(&costs, graph, limits[0])?
    } else {
        build_miqp(&costs, graph, ctx, &limits)?
    };
    Ok(Some(model))
}

struct ConfigSolved {
    report: ConfigReport,
    best: Option<Assignment>,
    strategies: Vec<IntraStrategy>,
}

fn solve_config(
    graph: &ComputationGraph,
    profile: &ClusterProfile,
    batch: u64,
    precision: Precision,
    deg: u32,
    c: u32,
    budget: &SolveBudget,
) -> Result<ConfigSolved> {
    let ctx = PlanContext::new(deg, c, batch, profile.n, precision)?;
    let infeasible_stats = |reason| ConfigSolved {
        report: ConfigReport {
            deg,
            c,
            objective: None,
            stats: SolveStats {
                nodes_explored: 0,
                best_bound: f64::INFINITY,
                incumbent: None,
                gap: f64::INFINITY,
                wall_time_s: 0.0,
                terminated_by: Termination::Infeasible,
            },
            reason: Some(reason),
        },
        best: None,
        strategies: Vec::new(),
    };
    let model = match build_config_model(graph, profile, &ctx)? {
        Some(m) => m,
        None => return Ok(infeasible_stats(InfeasibleReason::Memory)),
    };
    let outcome = solve_exact(&model, budget)?;
    Ok(ConfigSolved {
        report: ConfigReport {
            deg,
            c,
            objective: outcome.best.as_ref().map(|a| a.objective),
            stats: outcome.stats,
            reason: outcome.reason,
        },
        strategies: model.costs.strategies.strategies.clone(),
        best: outcome.best,
    })
}

/// Run the full sweep and return the best plan.
pub fn unified_optimize(
    graph: &ComputationGraph,
    profile: &ClusterProfile,
    batch: u64,
    precision: Precision,
    options: &UopOptions,
) -> Result<UopResult> {
    let started = std::time::Instant::now();
    let graph_violations = crate::graph::validate_graph(graph);
    if let Some(first) = graph_violations.first() {
        return Err(Error::Schema {
            field: "model".to_string(),
            message: format!(
                "invalid computation graph: {first} ({} violations in total)",
                graph_violations.len()
            ),
        });
    }
    profile.validate()?;
    if batch == 0 {
        return Err(Error::InvalidInput("batch must be >= 1".to_string()));
    }

    // Single-stage configuration first.
    let first = solve_config(graph, profile, batch, precision, 1, 1, &options.budget)?;
    let cutoff = if options.use_previous_best_cutoff {
        first.best.as_ref().map(|a| a.objective)
    } else {
        None
    };

    let pipeline_configs: Vec<(u32, u32)> = sweep_configs(profile.n, batch)[1..].to_vec();
    let pipeline_budget = SolveBudget {
        previous_best: cutoff.or(options.budget.previous_best),
        ..options.budget
    };
    let solve_one = |&(deg, c): &(u32, u32)| {
        solve_config(graph, profile, batch, precision, deg, c, &pipeline_budget)
    };
    let solved: Vec<Result<ConfigSolved>> = if options.parallel {
        pipeline_configs.par_iter().map(solve_one).collect()
    } else {
        pipeline_configs.iter().map(solve_one).collect()
    };

    let mut all = vec![first];
    for s in solved {
        all.push(s?);
    }

    // Deterministic winner: smallest (objective, deg, c).
    let mut winner: Option<usize> = None;
    for (idx, s) in all.iter().enumerate() {
        if let Some(best) = &s.best {
            let better = match winner {
                None => true,
                Some(w) => {
                    let wb = all[w].best.as_ref().unwrap();
                    let key = (best.objective, s.report.deg, s.report.c);
                    let wkey = (wb.objective, all[w].report.deg, all[w].report.c);
                    key < wkey
                }
            };
            if better {
                winner = Some(idx);
            }
        }
    }

    let total_wall_time_s = started.elapsed().as_secs_f64();
    let Some(widx) = winner else {
        let entries = all
            .iter()
            .map(|s| InfeasibleConfig {
                deg: s.report.deg,
                c: s.report.c,
                reason: match (s.report.reason, s.report.stats.terminated_by) {
                    (_, Termination::TimeLimit) => InfeasibleKind::Timeout,
                    (Some(InfeasibleReason::Memory), _) => InfeasibleKind::Memory,
                    (Some(InfeasibleReason::Cutoff), _) => InfeasibleKind::Cutoff,
                    _ => InfeasibleKind::Placement,
                },
            })
            .collect();
        return Err(Error::Infeasible(InfeasibilityReport { entries }));
    };

    let chosen = &all[widx];
    let assignment = chosen.best.as_ref().unwrap();
    let (deg, c) = (chosen.report.deg, chosen.report.c);
    let plan = ParallelPlan {
        deg,
        c,
        micro_batch: batch / c as u64,
        per_stage_devices: profile.n / deg,
        stage_of: assignment.stage_of.clone(),
        strategies: assignment
            .strategy_of
            .iter()
            .map(|&k| chosen.strategies[k])
            .collect(),
        tpi_estimate_s: assignment.objective,
        stage_costs: assignment.stage_costs.clone(),
        boundary_costs: assignment.boundary_costs.clone(),
        stage_memory: assignment.stage_memory.clone(),
    };
    Ok(UopResult {
        plan,
        configs: all.into_iter().map(|s| s.report).collect(),
        total_wall_time_s,
    })
}
