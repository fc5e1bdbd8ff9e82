//! Exact solvers for the per-configuration models: a branch-and-bound search
//! used in production, a brute-force enumerator used as an oracle on small
//! instances, and an assignment checker.
//!
//! Both solvers restrict the search to *ordered* placements — along every
//! edge the destination's stage index is at least the source's. Ordered
//! placements always satisfy the model's contiguity rows, and they exclude
//! backwards pipelines (a later stage feeding an earlier one) that the rows
//! alone would admit. All placements are surjective: every stage hosts at
//! least one layer.
//!
//! Determinism: ties on the objective are broken by the lexicographically
//! smallest `(stage_of, strategy_of)` vector pair, so the reported optimum
//! is a pure function of the model, independent of exploration order. The
//! winning assignment is always re-evaluated with the same arithmetic the
//! oracle uses, making objective values bit-comparable across solvers.

use std::time::Instant;

use crate::miqp::MiqpModel;
use crate::{Error, Result};

/// Search budget. `time_limit_s` bounds wall time (values `<= 0` or
/// non-finite disable the limit); `gap_tol` allows early pruning once the
/// incumbent is within the given relative gap; `previous_best` installs an
/// objective cutoff so the search only reports plans at least as good as a
/// known one.
#[derive(Debug, Clone, Copy)]
pub struct SolveBudget {
    pub time_limit_s: f64,
    pub gap_tol: f64,
    pub previous_best: Option<f64>,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            time_limit_s: 60.0,
            gap_tol: 1e-4,
            previous_best: None,
        }
    }
}

impl SolveBudget {
    /// A budget with no time limit, no relative gap and no cutoff; the
    /// search runs to proven optimality.
    pub fn exact() -> Self {
        SolveBudget {
            time_limit_s: f64::INFINITY,
            gap_tol: 0.0,
            previous_best: None,
        }
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Search space exhausted (up to the configured gap).
    Optimal,
    /// Wall-time limit hit; the incumbent (if any) may be suboptimal.
    TimeLimit,
    /// No feasible assignment exists (or none beats the cutoff).
    Infeasible,
}

/// Why no assignment was returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// Every completion violated a per-stage memory limit.
    Memory,
    /// No ordered, surjective placement exists (e.g. more stages than
    /// layers, or no strategy row is feasible).
    Placement,
    /// Feasible assignments exist but none beat `previous_best`.
    Cutoff,
}

/// Solver counters and quality measures.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    /// Search-tree nodes expanded (partial assignments visited).
    pub nodes_explored: u64,
    /// Best proven lower bound on the optimum.
    pub best_bound: f64,
    /// Objective of the best assignment found, if any.
    pub incumbent: Option<f64>,
    /// `(incumbent - best_bound) / max(incumbent, eps)`; infinite without an
    /// incumbent.
    pub gap: f64,
    pub wall_time_s: f64,
    pub terminated_by: Termination,
}

/// A complete assignment together with its evaluated costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Stage index per layer (all zeros for single-stage models).
    pub stage_of: Vec<usize>,
    /// Strategy index per layer.
    pub strategy_of: Vec<usize>,
    pub objective: f64,
    /// Per-stage computation costs `p_i`.
    pub stage_costs: Vec<f64>,
    /// Per-boundary communication costs `o_j` (empty for single-stage).
    pub boundary_costs: Vec<f64>,
    /// Per-stage memory use in bytes.
    pub stage_memory: Vec<f64>,
}

/// Result of a solve: the best assignment (if any), statistics, and a reason
/// when nothing was found.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub best: Option<Assignment>,
    pub stats: SolveStats,
    pub reason: Option<InfeasibleReason>,
}

/// Raw evaluation of an assignment against the model's cost matrices. This
/// is the reference arithmetic: terms are accumulated in layer order, then
/// edge order, exactly as written here, by every code path that reports an
/// objective.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectEval {
    pub p: Vec<f64>,
    pub o: Vec<f64>,
    pub t: f64,
    pub mem: Vec<f64>,
    pub objective: f64,
}

/// Evaluate `(stage_of, strategy_of)` directly from the cost matrices.
///
/// Same-stage edges add their resharding cost to the stage; an edge from
/// stage `s` to stage `s' > s` adds its cross-stage cost to every boundary
/// in `s..s'`. Edges pointing backwards (`s' < s`) contribute nothing, in
/// agreement with the model rows; `check_assignment` reports them.
pub fn direct_eval(model: &MiqpModel, stage_of: &[usize], strategy_of: &[usize]) -> DirectEval {
    let deg = model.deg;
    let mut p = vec![0.0; deg];
    let mut o = vec![0.0; deg.saturating_sub(1)];
    let mut mem = vec![0.0; deg];
    for u in 0..model.num_layers {
        let (i, k) = (stage_of[u], strategy_of[u]);
        p[i] += model.costs.a[u][k];
        mem[i] += model.costs.m[u][k];
    }
    for (e, &(u, v)) in model.edges.iter().enumerate() {
        let (su, sv) = (stage_of[u], stage_of[v]);
        let (k, l) = (strategy_of[u], strategy_of[v]);
        if su == sv {
            p[su] += model.costs.r[e][k][l];
        } else {
            for j in su..sv {
                o[j] += model.costs.rp[e][k][l];
            }
        }
    }
    let t = p.iter().chain(o.iter()).fold(0.0f64, |acc, &v| acc.max(v));
    let objective = p.iter().sum::<f64>() + o.iter().sum::<f64>() + (model.c as f64 - 1.0) * t;
    DirectEval {
        p,
        o,
        t,
        mem,
        objective,
    }
}

fn validate_assignment_shape(
    model: &MiqpModel,
    stage_of: &[usize],
    strategy_of: &[usize],
) -> Result<()> {
    if stage_of.len() != model.num_layers || strategy_of.len() != model.num_layers {
        return Err(Error::InvalidInput(format!(
            "assignment covers {}/{} layers but the model has {}",
            stage_of.len(),
            strategy_of.len(),
            model.num_layers
        )));
    }
    if let Some(&s) = stage_of.iter().find(|&&s| s >= model.deg) {
        return Err(Error::InvalidInput(format!(
            "stage index {s} out of range for deg={}",
            model.deg
        )));
    }
    if let Some(&k) = strategy_of.iter().find(|&&k| k >= model.num_strategies) {
        return Err(Error::InvalidInput(format!(
            "strategy index {k} out of range for |S|={}",
            model.num_strategies
        )));
    }
    Ok(())
}

fn assignment_from(model: &MiqpModel, stage_of: Vec<usize>, strategy_of: Vec<usize>) -> Assignment {
    let eval = direct_eval(model, &stage_of, &strategy_of);
    Assignment {
        stage_of,
        strategy_of,
        objective: eval.objective,
        stage_costs: eval.p,
        boundary_costs: eval.o,
        stage_memory: eval.mem,
    }
}

/// `a` strictly better than `b` under the deterministic total order.
fn better(obj_a: f64, key_a: (&[usize], &[usize]), obj_b: f64, key_b: (&[usize], &[usize])) -> bool {
    obj_a < obj_b || (obj_a == obj_b && key_a < key_b)
}

// ---------------------------------------------------------------------------
// Branch and bound
// ---------------------------------------------------------------------------

struct SearchState<'m> {
    model: &'m MiqpModel,
    budget: SolveBudget,
    in_edges: Vec<Vec<(usize, usize)>>, // per node: (edge index, src)
    min_a: Vec<f64>,                    // per layer: min A over non-sentinel strategies
    suffix_min_a: Vec<f64>,             // sum of min_a over layers u..V
    stage_of: Vec<usize>,
    strategy_of: Vec<usize>,
    p: Vec<f64>,
    o: Vec<f64>,
    mem: Vec<f64>,
    stage_count: Vec<usize>,
    best: Option<(f64, Vec<usize>, Vec<usize>)>,
    incumbent_obj: f64,
    cutoff_active: bool,
    saw_memory_prune: bool,
    nodes: u64,
    started: Instant,
    stopped: bool,
    open_bound_min: f64,
}

impl<'m> SearchState<'m> {
    fn margin(&self) -> f64 {
        if let Some((obj, _, _)) = &self.best {
            self.budget.gap_tol * obj.abs().max(1e-12)
        } else if self.cutoff_active {
            self.budget.gap_tol * self.incumbent_obj.abs().max(1e-12)
        } else {
            0.0
        }
    }

    fn time_exceeded(&self) -> bool {
        self.budget.time_limit_s.is_finite()
            && self.budget.time_limit_s > 0.0
            && self.started.elapsed().as_secs_f64() > self.budget.time_limit_s
    }

    fn node_bound(&self, next_layer: usize) -> f64 {
        let committed: f64 = self.p.iter().sum::<f64>() + self.o.iter().sum::<f64>();
        let max_committed = self
            .p
            .iter()
            .chain(self.o.iter())
            .fold(0.0f64, |acc, &v| acc.max(v));
        committed + self.suffix_min_a[next_layer] + (self.model.c as f64 - 1.0) * max_committed
    }

    fn dive(&mut self, u: usize) {
        self.nodes += 1;
        if self.nodes & 0xFF == 0 && self.time_exceeded() {
            self.stopped = true;
        }
        if self.stopped {
            self.open_bound_min = self.open_bound_min.min(self.node_bound(u));
            return;
        }

        let v = self.model.num_layers;
        if u == v {
            if self.stage_count.contains(&0) {
                return;
            }
            let eval = direct_eval(self.model, &self.stage_of, &self.strategy_of);
            let candidate_key = (self.stage_of.as_slice(), self.strategy_of.as_slice());
            let improves = match &self.best {
                None => {
                    // With an active cutoff the implicit incumbent has no
                    // key; any objective at or below it wins.
                    !self.cutoff_active || eval.objective < self.incumbent_obj
                }
                Some((obj, s, k)) => {
                    better(eval.objective, candidate_key, *obj, (s.as_slice(), k.as_slice()))
                }
            };
            if improves {
                self.incumbent_obj = eval.objective;
                self.best = Some((
                    eval.objective,
                    self.stage_of.clone(),
                    self.strategy_of.clone(),
                ));
            }
            return;
        }

        // Earliest admissible stage: at or after every predecessor.
        let lo = self.in_edges[u]
            .iter()
            .map(|&(_, src)| self.stage_of[src])
            .max()
            .unwrap_or(0);
        let remaining_after = v - u - 1;

        for stage in lo..self.model.deg {
            for k in 0..self.model.num_strategies {
                if !self.model.costs.m[u][k].is_finite() {
                    continue;
                }
                // Apply.
                let p_old = self.p[stage];
                let mem_old = self.mem[stage];
                self.p[stage] += self.model.costs.a[u][k];
                self.mem[stage] += self.model.costs.m[u][k];
                let mut o_undo: Vec<(usize, f64)> = Vec::new();
                for &(e, src) in &self.in_edges[u] {
                    let ss = self.stage_of[src];
                    let ks = self.strategy_of[src];
                    if ss == stage {
                        self.p[stage] += self.model.costs.r[e][ks][k];
                    } else {
                        for j in ss..stage {
                            o_undo.push((j, self.o[j]));
                            self.o[j] += self.model.costs.rp[e][ks][k];
                        }
                    }
                }
                self.stage_of[u] = stage;
                self.strategy_of[u] = k;
                self.stage_count[stage] += 1;

                let empty_stages = self.stage_count.iter().filter(|&&c| c == 0).count();
                let mem_ok = self.mem[stage] <= self.model.mem_limits[stage];
                if !mem_ok {
                    self.saw_memory_prune = true;
                }
                if mem_ok && empty_stages <= remaining_after {
                    // The 1e-10 slack keeps subtrees whose bound ties the
                    // incumbent (needed for deterministic tie-breaking) and
                    // absorbs rounding drift between the incremental sums
                    // and the reference evaluation.
                    let bound = self.node_bound(u + 1);
                    if bound <= self.incumbent_obj - self.margin() + 1e-10 {
                        self.dive(u + 1);
                    }
                }

                // Undo, restoring the exact previous values.
                self.stage_count[stage] -= 1;
                for &(j, old) in o_undo.iter().rev() {
                    self.o[j] = old;
                }
                self.p[stage] = p_old;
                self.mem[stage] = mem_old;
                if self.stopped {
                    return;
                }
            }
        }
    }
}

/// Solve a model exactly by depth-first branch and bound over ordered,
/// surjective placements and strategy selections.
pub fn solve_exact(model: &MiqpModel, budget: &SolveBudget) -> Result<SolveOutcome> {
    let v = model.num_layers;
    if v == 0 {
        return Err(Error::InvalidInput("model has no layers".to_string()));
    }
    debug_assert!(model.edges.iter().all(|&(s, d)| s < d));
    let started = Instant::now();

    let mut in_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); v];
    for (e, &(src, dst)) in model.edges.iter().enumerate() {
        in_edges[dst].push((e, src));
    }
    let min_a: Vec<f64> = (0..v)
        .map(|u| {
            (0..model.num_strategies)
                .filter(|&k| model.costs.m[u][k].is_finite())
                .map(|k| model.costs.a[u][k])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut suffix_min_a = vec![0.0; v + 1];
    for u in (0..v).rev() {
        suffix_min_a[u] = suffix_min_a[u + 1] + min_a[u];
    }
    let root_bound = suffix_min_a[0];

    let cutoff_active = budget.previous_best.is_some();
    let incumbent_obj = match budget.previous_best {
        // next_up keeps assignments tied with the known best reachable.
        Some(prev) => prev.next_up(),
        None => f64::INFINITY,
    };

    let mut state = SearchState {
        model,
        budget: *budget,
        in_edges,
        min_a,
        suffix_min_a,
        stage_of: vec![0; v],
        strategy_of: vec![0; v],
        p: vec![0.0; model.deg],
        o: vec![0.0; model.deg.saturating_sub(1)],
        mem: vec![0.0; model.deg],
        stage_count: vec![0; model.deg],
        best: None,
        incumbent_obj,
        cutoff_active,
        saw_memory_prune: false,
        nodes: 0,
        started,
        stopped: false,
        open_bound_min: f64::INFINITY,
    };
    if state.min_a.iter().all(|m| m.is_finite()) && v >= model.deg {
        state.dive(0);
    } else if state.min_a.iter().any(|m| !m.is_finite()) {
        // Some layer has no memory-feasible strategy at all.
        state.saw_memory_prune = true;
    }

    let wall_time_s = started.elapsed().as_secs_f64();
    let (best, terminated_by, reason) = match (state.best.take(), state.stopped) {
        (Some((_, s, k)), stop) => {
            let asg = assignment_from(model, s, k);
            let term = if stop {
                Termination::TimeLimit
            } else {
                Termination::Optimal
            };
            (Some(asg), term, None)
        }
        (None, true) => (None, Termination::TimeLimit, None),
        (None, false) => {
            let why = if cutoff_active {
                InfeasibleReason::Cutoff
            } else if state.saw_memory_prune {
                InfeasibleReason::Memory
            } else {
                InfeasibleReason::Placement
            };
            (None, Termination::Infeasible, Some(why))
        }
    };

    let incumbent = best.as_ref().map(|a| a.objective);
    let margin = match incumbent {
        Some(obj) => budget.gap_tol * obj.abs().max(1e-12),
        None => 0.0,
    };
    let best_bound = match (incumbent, terminated_by) {
        (Some(obj), Termination::Optimal) => (obj - margin).min(obj),
        (Some(obj), _) => state.open_bound_min.min(obj - margin).max(root_bound.min(obj)),
        (None, Termination::TimeLimit) => state.open_bound_min.min(root_bound),
        (None, _) => f64::INFINITY,
    };
    let gap = match incumbent {
        Some(obj) => ((obj - best_bound) / obj.abs().max(1e-12)).max(0.0),
        None => f64::INFINITY,
    };
    Ok(SolveOutcome {
        best,
        stats: SolveStats {
            nodes_explored: state.nodes,
            best_bound,
            incumbent,
            gap,
            wall_time_s,
            terminated_by,
        },
        reason,
    })
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

/// Enumerate every ordered, surjective placement and every strategy
/// combination, and return the deterministic optimum. Guarded to small
/// instances: at most 8 layers and at most `1e7` candidate combinations.
pub fn solve_exhaustive(model: &MiqpModel) -> Result<SolveOutcome> {
    let v = model.num_layers;
    if v == 0 {
        return Err(Error::InvalidInput("model has no layers".to_string()));
    }
    let combos = (model.num_strategies as f64).powi(v as i32) * (model.deg as f64).powi(v as i32);
    if v > 8 || combos > 1e7 {
        return Err(Error::GuardExceeded(format!(
            "exhaustive solve limited to 8 layers and 1e7 combinations; got {v} layers, {combos:.3e} combinations"
        )));
    }
    let started = Instant::now();

    let placements = enumerate_ordered_placements(model);
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    let mut nodes = 0u64;
    let mut saw_memory = false;
    let mut strategy_of = vec![0usize; v];
    for stage_of in &placements {
        loop {
            nodes += 1;
            let eval = direct_eval(model, stage_of, &strategy_of);
            let mem_ok = eval
                .mem
                .iter()
                .zip(&model.mem_limits)
                .all(|(used, limit)| used <= limit);
            if mem_ok {
                let is_better = match &best {
                    None => true,
                    Some((obj, s, k)) => better(
                        eval.objective,
                        (stage_of.as_slice(), strategy_of.as_slice()),
                        *obj,
                        (s.as_slice(), k.as_slice()),
                    ),
                };
                if is_better {
                    best = Some((eval.objective, stage_of.clone(), strategy_of.clone()));
                }
            } else {
                saw_memory = true;
            }
            // Odometer over strategies.
            let mut pos = v;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                strategy_of[pos] += 1;
                if strategy_of[pos] < model.num_strategies {
                    break;
                }
                strategy_of[pos] = 0;
            }
            if strategy_of.iter().all(|&k| k == 0) {
                break;
            }
        }
    }

    let wall_time_s = started.elapsed().as_secs_f64();
    let outcome = match best {
        Some((obj, s, k)) => SolveOutcome {
            best: Some(assignment_from(model, s, k)),
            stats: SolveStats {
                nodes_explored: nodes,
                best_bound: obj,
                incumbent: Some(obj),
                gap: 0.0,
                wall_time_s,
                terminated_by: Termination::Optimal,
            },
            reason: None,
        },
        None => SolveOutcome {
            best: None,
            stats: SolveStats {
                nodes_explored: nodes,
                best_bound: f64::INFINITY,
                incumbent: None,
                gap: f64::INFINITY,
                wall_time_s,
                terminated_by: Termination::Infeasible,
            },
            reason: Some(if saw_memory {
                InfeasibleReason::Memory
            } else {
                InfeasibleReason::Placement
            }),
        },
    };
    Ok(outcome)
}

/// All stage vectors that are ordered along every edge and use every stage.
pub fn enumerate_ordered_placements(model: &MiqpModel) -> Vec<Vec<usize>> {
    let v = model.num_layers;
    let mut in_edges: Vec<Vec<usize>> = vec![Vec::new(); v];
    for &(src, dst) in &model.edges {
        in_edges[dst].push(src);
    }
    let mut out = Vec::new();
    let mut stage_of = vec![0usize; v];
    fn rec(
        u: usize,
        v: usize,
        deg: usize,
        in_edges: &[Vec<usize>],
        stage_of: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if u == v {
            let mut seen = vec![false; deg];
            for &s in stage_of.iter() {
                seen[s] = true;
            }
            if seen.iter().all(|&x| x) {
                out.push(stage_of.clone());
            }
            return;
        }
        let lo = in_edges[u].iter().map(|&s| stage_of[s]).max().unwrap_or(0);
        for stage in lo..deg {
            stage_of[u] = stage;
            rec(u + 1, v, deg, in_edges, stage_of, out);
        }
        stage_of[u] = 0;
    }
    rec(0, v, model.deg, &in_edges, &mut stage_of, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Assignment checking
// ---------------------------------------------------------------------------

/// A rule broken by a proposed assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// An edge runs from a later stage to an earlier one.
    OrderViolated { src: usize, dst: usize },
    /// A stage hosts no layer.
    StageEmpty { stage: usize },
    /// A stage's layer set is not contiguous in the graph.
    NonContiguous { stage: usize },
    /// A stage exceeds its memory limit.
    MemoryExceeded {
        stage: usize,
        used_bytes: f64,
        limit_bytes: f64,
    },
    /// A layer selected a strategy its micro-batch cannot use.
    SentinelStrategy { layer: usize, strategy: usize },
    /// The stated objective differs from the recomputed one by more than
    /// 1e-9.
    ObjectiveMismatch { stated: f64, recomputed: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::OrderViolated { src, dst } => {
                write!(f, "edge {src}->{dst} runs backwards across stages")
            }
            Violation::StageEmpty { stage } => write!(f, "stage {stage} hosts no layer"),
            Violation::NonContiguous { stage } => {
                write!(f, "stage {stage} is not a contiguous block of the graph")
            }
            Violation::MemoryExceeded {
                stage,
                used_bytes,
                limit_bytes,
            } => write!(
                f,
                "stage {stage} uses {used_bytes:.3e} bytes, over the limit {limit_bytes:.3e}"
            ),
            Violation::SentinelStrategy { layer, strategy } => write!(
                f,
                "layer {layer} selected strategy {strategy}, which is infeasible for its micro-batch"
            ),
            Violation::ObjectiveMismatch { stated, recomputed } => write!(
                f,
                "stated objective {stated} differs from recomputed {recomputed}"
            ),
        }
    }
}

/// Check a complete assignment against the model. Returns all violations in
/// a deterministic order (empty means the assignment is valid and its stated
/// objective matches to 1e-9).
pub fn check_assignment(model: &MiqpModel, assignment: &Assignment) -> Result<Vec<Violation>> {
    validate_assignment_shape(model, &assignment.stage_of, &assignment.strategy_of)?;
    let v = model.num_layers;
    let mut violations = Vec::new();

    for &(src, dst) in &model.edges {
        if assignment.stage_of[src] > assignment.stage_of[dst] {
            violations.push(Violation::OrderViolated { src, dst });
        }
    }

    let mut count = vec![0usize; model.deg];
    for &s in &assignment.stage_of {
        count[s] += 1;
    }
    for (stage, &c) in count.iter().enumerate() {
        if c == 0 {
            violations.push(Violation::StageEmpty { stage });
        }
    }

    // Contiguity per stage via transitive closure over the model edges.
    let mut reach = vec![vec![false; v]; v];
    for &(s, d) in &model.edges {
        reach[s][d] = true;
    }
    for m in 0..v {
        for a in 0..v {
            if reach[a][m] {
                for b in 0..v {
                    if reach[m][b] {
                        reach[a][b] = true;
                    }
                }
            }
        }
    }
    for stage in 0..model.deg {
        let members: Vec<usize> = (0..v).filter(|&u| assignment.stage_of[u] == stage).collect();
        if members.is_empty() {
            continue;
        }
        let inside = |x: usize| assignment.stage_of[x] == stage;
        let broken = (0..v).any(|w| {
            !inside(w)
                && members.iter().any(|&a| reach[a][w])
                && members.iter().any(|&b| reach[w][b])
        });
        if broken {
            violations.push(Violation::NonContiguous { stage });
        }
    }

    for u in 0..v {
        let k = assignment.strategy_of[u];
        if !model.costs.m[u][k].is_finite() {
            violations.push(Violation::SentinelStrategy { layer: u, strategy: k });
        }
    }

    let eval = direct_eval(model, &assignment.stage_of, &assignment.strategy_of);
    for (stage, (&used, &limit)) in eval.mem.iter().zip(&model.mem_limits).enumerate() {
        if used > limit || used.is_nan() {
            violations.push(Violation::MemoryExceeded {
                stage,
                used_bytes: used,
                limit_bytes: limit,
            });
        }
    }

    if (assignment.objective - eval.objective).abs() > 1e-9 {
        violations.push(Violation::ObjectiveMismatch {
            stated: assignment.objective,
            recomputed: eval.objective,
        });
    }
    Ok(violations)
}
