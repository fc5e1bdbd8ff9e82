//! Construction of the per-configuration quadratic integer model, its exact
//! linearization, and CPLEX-LP text export.
//!
//! For a pipeline of `deg >= 2` stages the model has binary variables
//! `P[u][i]` (layer `u` on stage `i`), `S[u][k]` (layer `u` uses strategy
//! `k`) and auxiliary `Z[u][i]`, plus continuous per-stage costs `p_i`,
//! per-boundary costs `o_j`, and an epigraph variable `t` for the bubble
//! term. The objective is `sum(p) + sum(o) + (c - 1) * t`.
//!
//! Constraint families:
//!
//! * `computation_stage` — one equality per stage defining `p_i` as the
//!   strategy-weighted execution cost of its layers plus same-stage
//!   resharding over edges with both endpoints on the stage;
//! * `communication_stage` — one equality per boundary `j` defining `o_j`:
//!   an edge placed from stage `i` to stage `i'` contributes its cross-stage
//!   resharding cost to every boundary it spans (`i <= j < i'`), so an edge
//!   crossing consecutive stages is charged once and an edge skipping stages
//!   is charged once per crossed boundary;
//! * `memory` — per-stage capacity over the selected layers/strategies;
//! * `order_preserving` — the `Z` rows that force every stage's layer set to
//!   be contiguous in the DAG;
//! * `layer_placement` — each layer on exactly one stage, each stage
//!   non-empty;
//! * `strategy_selection` — each layer selects exactly one strategy, with
//!   explicit `S = 0` fixings for pairs carrying the infeasibility sentinel;
//! * `epigraph` — `t >= p_i`, `t >= o_j`.
//!
//! A note on ordering: the `Z` rows guarantee per-stage contiguity but do
//! *not* by themselves forbid placements where an edge points from a later
//! stage to an earlier one (both singleton stages of a reversed two-layer
//! chain are contiguous). Such placements are not valid pipelines — data
//! would have to flow backwards — and the solver additionally restricts its
//! search to placements with non-decreasing stage indices along every edge,
//! which implies contiguity. The exported model is intended for inspection
//! and for verifying objective values at given assignments, not as a
//! stand-alone encoding of the search space.
//!
//! The deg = 1 variant (no pipeline) drops `P`, `Z`, `o` and `t` entirely:
//! one `computation_stage` equality over `S` products defines `p_0`, which is
//! also the objective.

use std::collections::BTreeMap;
use std::io::Write;

use crate::cost::CostMatrices;
use crate::cost::PlanContext;
use crate::graph::ComputationGraph;
use crate::{Error, Result};

/// Constraint family tags, used for row counting and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    ComputationStage,
    CommunicationStage,
    Memory,
    OrderPreserving,
    LayerPlacement,
    StrategySelection,
    Epigraph,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::ComputationStage => "computation_stage",
            Family::CommunicationStage => "communication_stage",
            Family::Memory => "memory",
            Family::OrderPreserving => "order_preserving",
            Family::LayerPlacement => "layer_placement",
            Family::StrategySelection => "strategy_selection",
            Family::Epigraph => "epigraph",
        };
        write!(f, "{s}")
    }
}

/// Index into the model's variable table.
pub type VarId = usize;

/// Decoded identity of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarDesc {
    /// `P_u_i`: layer `u` placed on stage `i`.
    Place { layer: usize, stage: usize },
    /// `S_u_k`: layer `u` uses strategy `k`.
    Strat { layer: usize, strat: usize },
    /// `Z_u_i`: contiguity auxiliary.
    Aux { layer: usize, stage: usize },
    /// `p_i`.
    StageCost { stage: usize },
    /// `o_j`.
    BoundaryCost { boundary: usize },
    /// `t`.
    Epigraph,
}

/// A product of decision variables with a coefficient. All variables in
/// `vars` are binary except that defining rows carry a single continuous
/// variable (`p_i` / `o_j` / `t`) as a linear monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub vars: Vec<VarId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

impl Sense {
    fn lp_symbol(self) -> &'static str {
        match self {
            Sense::Eq => "=",
            Sense::Le => "<=",
            Sense::Ge => ">=",
        }
    }
}

/// One (possibly quadratic/quartic) constraint row.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub family: Family,
    /// Stable row label, also used in the LP export.
    pub label: String,
    /// Stage / boundary / layer index the row belongs to, for evaluators.
    pub row_index: usize,
    pub terms: Vec<Monomial>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Evaluation of a model at one binary assignment: the stage/boundary costs
/// implied by the defining rows, the pinned epigraph value, and the
/// objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEval {
    pub p: Vec<f64>,
    pub o: Vec<f64>,
    pub t: f64,
    pub objective: f64,
}

/// The quadratic integer model for one `(deg, c)` configuration.
#[derive(Debug, Clone)]
pub struct MiqpModel {
    pub num_layers: usize,
    pub deg: usize,
    pub num_strategies: usize,
    /// Micro-batch count; weight of the epigraph term is `c - 1`.
    pub c: u32,
    /// Edge endpoints in graph order, mirrored from the cost matrices.
    pub edges: Vec<(usize, usize)>,
    /// The cost matrices every coefficient was pulled from.
    pub costs: CostMatrices,
    /// Per-stage memory limits in bytes (length `deg`).
    pub mem_limits: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Linear objective: `sum p + sum o + (c-1) t` (the `t` term is omitted
    /// when `c = 1`; the evaluator still reports `t = max(p, o)`).
    pub objective: Vec<Monomial>,
    /// Whether the model carries placement variables (false for deg = 1).
    pub has_placement: bool,
}

impl MiqpModel {
    // --- variable layout -------------------------------------------------
    //
    // deg >= 2:  [P: V*deg][S: V*ns][Z: V*deg][p: deg][o: deg-1][t]
    // deg == 1:  [S: V*ns][p: 1]

    fn offset_s(&self) -> usize {
        if self.has_placement {
            self.num_layers * self.deg
        } else {
            0
        }
    }

    fn offset_z(&self) -> usize {
        self.offset_s() + self.num_layers * self.num_strategies
    }

    fn offset_p(&self) -> usize {
        if self.has_placement {
            self.offset_z() + self.num_layers * self.deg
        } else {
            self.offset_s() + self.num_layers * self.num_strategies
        }
    }

    fn offset_o(&self) -> usize {
        self.offset_p() + self.deg
    }

    fn offset_t(&self) -> usize {
        self.offset_o() + self.deg.saturating_sub(1)
    }

    /// Total number of variables (binary + continuous).
    pub fn num_vars(&self) -> usize {
        if self.has_placement {
            self.offset_t() + 1
        } else {
            self.offset_p() + 1
        }
    }

    pub fn place_var(&self, layer: usize, stage: usize) -> VarId {
        debug_assert!(self.has_placement && layer < self.num_layers && stage < self.deg);
        layer * self.deg + stage
    }

    pub fn strat_var(&self, layer: usize, strat: usize) -> VarId {
        debug_assert!(layer < self.num_layers && strat < self.num_strategies);
        self.offset_s() + layer * self.num_strategies + strat
    }

    pub fn aux_var(&self, layer: usize, stage: usize) -> VarId {
        debug_assert!(self.has_placement && layer < self.num_layers && stage < self.deg);
        self.offset_z() + layer * self.deg + stage
    }

    pub fn stage_cost_var(&self, stage: usize) -> VarId {
        debug_assert!(stage < self.deg);
        self.offset_p() + stage
    }

    pub fn boundary_cost_var(&self, boundary: usize) -> VarId {
        debug_assert!(self.has_placement && boundary + 1 < self.deg);
        self.offset_o() + boundary
    }

    pub fn epigraph_var(&self) -> VarId {
        debug_assert!(self.has_placement);
        self.offset_t()
    }

    /// Decode a variable id back to its identity.
    pub fn describe(&self, id: VarId) -> VarDesc {
        if self.has_placement && id < self.offset_s() {
            VarDesc::Place {
                layer: id / self.deg,
                stage: id % self.deg,
            }
        } else if id < self.offset_s() + self.num_layers * self.num_strategies {
            let rel = id - self.offset_s();
            VarDesc::Strat {
                layer: rel / self.num_strategies,
                strat: rel % self.num_strategies,
            }
        } else if self.has_placement && id < self.offset_p() {
            let rel = id - self.offset_z();
            VarDesc::Aux {
                layer: rel / self.deg,
                stage: rel % self.deg,
            }
        } else if id < self.offset_o() {
            VarDesc::StageCost {
                stage: id - self.offset_p(),
            }
        } else if self.has_placement && id < self.offset_t() {
            VarDesc::BoundaryCost {
                boundary: id - self.offset_o(),
            }
        } else {
            VarDesc::Epigraph
        }
    }

    /// Stable, documented variable name (also used by the LP export).
    pub fn var_name(&self, id: VarId) -> String {
        match self.describe(id) {
            VarDesc::Place { layer, stage } => format!("P_{layer}_{stage}"),
            VarDesc::Strat { layer, strat } => format!("S_{layer}_{strat}"),
            VarDesc::Aux { layer, stage } => format!("Z_{layer}_{stage}"),
            VarDesc::StageCost { stage } => format!("p_{stage}"),
            VarDesc::BoundaryCost { boundary } => format!("o_{boundary}"),
            VarDesc::Epigraph => "t".to_string(),
        }
    }

    pub fn is_binary(&self, id: VarId) -> bool {
        matches!(
            self.describe(id),
            VarDesc::Place { .. } | VarDesc::Strat { .. } | VarDesc::Aux { .. }
        )
    }

    /// Number of rows carrying a given family tag.
    pub fn count_family(&self, family: Family) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    /// Evaluate one row's left-hand side at a full variable assignment and
    /// report whether the row is satisfied (1e-9 slack).
    pub fn row_satisfied(&self, row: &Constraint, values: &[f64]) -> bool {
        let lhs: f64 = row
            .terms
            .iter()
            .map(|m| m.coeff * m.vars.iter().map(|&v| values[v]).product::<f64>())
            .sum();
        match row.sense {
            Sense::Eq => (lhs - row.rhs).abs() <= 1e-9,
            Sense::Le => lhs <= row.rhs + 1e-9,
            Sense::Ge => lhs >= row.rhs - 1e-9,
        }
    }

    /// Evaluate the model at a binary assignment given as raw values for the
    /// binary variables (entries for continuous variables are ignored).
    ///
    /// The defining equality rows determine `p` and `o`; `t` is pinned to
    /// `max(p ∪ o)` — its optimal value whenever `c >= 2`, and the reported
    /// value by convention when `c = 1`.
    pub fn evaluate_bits(&self, values: &[f64]) -> ModelEval {
        // All binary variables precede the continuous block.
        assert!(values.len() >= self.offset_p());
        let mut p = vec![0.0; self.deg];
        let mut o = vec![0.0; self.deg.saturating_sub(1)];
        for row in &self.constraints {
            let quad_sum = || -> f64 {
                row.terms
                    .iter()
                    .filter(|m| m.vars.iter().all(|&v| self.is_binary(v)))
                    .map(|m| m.coeff * m.vars.iter().map(|&v| values[v]).product::<f64>())
                    .sum()
            };
            match row.family {
                Family::ComputationStage => p[row.row_index] = quad_sum(),
                Family::CommunicationStage => o[row.row_index] = quad_sum(),
                _ => {}
            }
        }
        let t = p
            .iter()
            .chain(o.iter())
            .fold(0.0f64, |acc, &v| acc.max(v));
        let objective =
            p.iter().sum::<f64>() + o.iter().sum::<f64>() + (self.c as f64 - 1.0) * t;
        ModelEval { p, o, t, objective }
    }

    /// Evaluate at a structured assignment (stage and strategy per layer).
    /// `Z` is irrelevant to costs and set to zero.
    pub fn evaluate_assignment(&self, stage_of: &[usize], strategy_of: &[usize]) -> ModelEval {
        let mut values = vec![0.0; self.num_vars()];
        for u in 0..self.num_layers {
            if self.has_placement {
                values[self.place_var(u, stage_of[u])] = 1.0;
            }
            values[self.strat_var(u, strategy_of[u])] = 1.0;
        }
        self.evaluate_bits(&values)
    }
}

fn push_term(terms: &mut Vec<Monomial>, coeff: f64, mut vars: Vec<VarId>) {
    if coeff == 0.0 {
        return;
    }
    vars.sort_unstable();
    terms.push(Monomial { coeff, vars });
}

fn check_shapes(costs: &CostMatrices, graph: &ComputationGraph) -> Result<()> {
    let v = graph.nodes.len();
    if costs.a.len() != v || costs.m.len() != v {
        return Err(Error::InvalidInput(format!(
            "cost matrices cover {} layers but the graph has {v}",
            costs.a.len()
        )));
    }
    if costs.r.len() != graph.edges.len() || costs.rp.len() != graph.edges.len() {
        return Err(Error::InvalidInput(format!(
            "cost matrices cover {} edges but the graph has {}",
            costs.r.len(),
            graph.edges.len()
        )));
    }
    let ns = costs.num_strategies();
    if ns == 0 || costs.a.iter().any(|row| row.len() != ns) {
        return Err(Error::InvalidInput(
            "inconsistent strategy dimension in cost matrices".to_string(),
        ));
    }
    Ok(())
}

/// Build the pipeline model for `deg >= 2` stages.
///
/// `mem_limits` carries one byte limit per stage (heterogeneous limits are
/// allowed; the uniform case repeats the profile value).
pub fn build_miqp(
    costs: &CostMatrices,
    graph: &ComputationGraph,
    ctx: &PlanContext,
    mem_limits: &[f64],
) -> Result<MiqpModel> {
    if ctx.deg < 2 {
        return Err(Error::Misuse(
            "build_miqp requires deg >= 2; use build_qip for the single-stage model".to_string(),
        ));
    }
    check_shapes(costs, graph)?;
    let deg = ctx.deg as usize;
    if mem_limits.len() != deg {
        return Err(Error::InvalidInput(format!(
            "expected {deg} per-stage memory limits, got {}",
            mem_limits.len()
        )));
    }
    let v = graph.nodes.len();
    let ns = costs.num_strategies();
    let mut model = MiqpModel {
        num_layers: v,
        deg,
        num_strategies: ns,
        c: ctx.c,
        edges: graph.edges.iter().map(|e| (e.src, e.dst)).collect(),
        costs: costs.clone(),
        mem_limits: mem_limits.to_vec(),
        constraints: Vec::new(),
        objective: Vec::new(),
        has_placement: true,
    };

    // Computation-stage rows: p_i = sum_u P_ui * (A_u . S_u)
    //                              + sum_edges P_ui P_vi (S_u^T R_e S_v).
    for i in 0..deg {
        let mut terms = Vec::new();
        for u in 0..v {
            for k in 0..ns {
                push_term(
                    &mut terms,
                    costs.a[u][k],
                    vec![model.place_var(u, i), model.strat_var(u, k)],
                );
            }
        }
        for (e, &(u, w)) in model.edges.iter().enumerate() {
            for k in 0..ns {
                for l in 0..ns {
                    push_term(
                        &mut terms,
                        costs.r[e][k][l],
                        vec![
                            model.place_var(u, i),
                            model.place_var(w, i),
                            model.strat_var(u, k),
                            model.strat_var(w, l),
                        ],
                    );
                }
            }
        }
        push_term(&mut terms, -1.0, vec![model.stage_cost_var(i)]);
        model.constraints.push(Constraint {
            family: Family::ComputationStage,
            label: format!("comp_stage_{i}"),
            row_index: i,
            terms,
            sense: Sense::Eq,
            rhs: 0.0,
        });
    }

    // Communication-stage rows: o_j collects R' of every edge spanning
    // boundary j, i.e. every (i, i') placement pair with i <= j < i'.
    for j in 0..deg - 1 {
        let mut terms = Vec::new();
        for (e, &(u, w)) in model.edges.iter().enumerate() {
            for i in 0..=j {
                for ip in (j + 1)..deg {
                    for k in 0..ns {
                        for l in 0..ns {
                            push_term(
                                &mut terms,
                                costs.rp[e][k][l],
                                vec![
                                    model.place_var(u, i),
                                    model.place_var(w, ip),
                                    model.strat_var(u, k),
                                    model.strat_var(w, l),
                                ],
                            );
                        }
                    }
                }
            }
        }
        push_term(&mut terms, -1.0, vec![model.boundary_cost_var(j)]);
        model.constraints.push(Constraint {
            family: Family::CommunicationStage,
            label: format!("comm_stage_{j}"),
            row_index: j,
            terms,
            sense: Sense::Eq,
            rhs: 0.0,
        });
    }

    // Memory rows: sum_u P_ui (M_u . S_u) <= m_i. Sentinel entries are
    // excluded here and handled as S fixings below.
    for i in 0..deg {
        let mut terms = Vec::new();
        for u in 0..v {
            for k in 0..ns {
                if costs.m[u][k].is_finite() {
                    push_term(
                        &mut terms,
                        costs.m[u][k],
                        vec![model.place_var(u, i), model.strat_var(u, k)],
                    );
                }
            }
        }
        model.constraints.push(Constraint {
            family: Family::Memory,
            label: format!("mem_{i}"),
            row_index: i,
            terms,
            sense: Sense::Le,
            rhs: mem_limits[i],
        });
    }

    // Order-preserving rows.
    for u in 0..v {
        for i in 0..deg {
            let mut terms = Vec::new();
            push_term(&mut terms, 1.0, vec![model.aux_var(u, i)]);
            push_term(&mut terms, -1.0, vec![model.place_var(u, i)]);
            model.constraints.push(Constraint {
                family: Family::OrderPreserving,
                label: format!("ord_a_{u}_{i}"),
                row_index: i,
                terms,
                sense: Sense::Ge,
                rhs: 0.0,
            });
        }
    }
    for &(u, w) in &model.edges {
        for i in 0..deg {
            let mut terms = Vec::new();
            push_term(&mut terms, 1.0, vec![model.aux_var(w, i)]);
            push_term(&mut terms, -1.0, vec![model.aux_var(u, i)]);
            model.constraints.push(Constraint {
                family: Family::OrderPreserving,
                label: format!("ord_b_{u}_{w}_{i}"),
                row_index: i,
                terms,
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }
    for &(u, w) in &model.edges {
        for i in 0..deg {
            let mut terms = Vec::new();
            push_term(&mut terms, 1.0, vec![model.aux_var(w, i)]);
            push_term(&mut terms, -1.0, vec![model.place_var(w, i)]);
            push_term(&mut terms, 1.0, vec![model.place_var(u, i)]);
            model.constraints.push(Constraint {
                family: Family::OrderPreserving,
                label: format!("ord_c_{u}_{w}_{i}"),
                row_index: i,
                terms,
                sense: Sense::Le,
                rhs: 1.0,
            });
        }
    }

    // Layer placement: each layer on exactly one stage; each stage used.
    for u in 0..v {
        let terms = (0..deg)
            .map(|i| Monomial {
                coeff: 1.0,
                vars: vec![model.place_var(u, i)],
            })
            .collect();
        model.constraints.push(Constraint {
            family: Family::LayerPlacement,
            label: format!("place_{u}"),
            row_index: u,
            terms,
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    for i in 0..deg {
        let terms = (0..v)
            .map(|u| Monomial {
                coeff: 1.0,
                vars: vec![model.place_var(u, i)],
            })
            .collect();
        model.constraints.push(Constraint {
            family: Family::LayerPlacement,
            label: format!("stage_nonempty_{i}"),
            row_index: i,
            terms,
            sense: Sense::Ge,
            rhs: 1.0,
        });
    }

    push_strategy_rows(&mut model);

    // Epigraph rows: t >= p_i, t >= o_j.
    for i in 0..deg {
        let mut terms = Vec::new();
        push_term(&mut terms, 1.0, vec![model.epigraph_var()]);
        push_term(&mut terms, -1.0, vec![model.stage_cost_var(i)]);
        model.constraints.push(Constraint {
            family: Family::Epigraph,
            label: format!("epi_p_{i}"),
            row_index: i,
            terms,
            sense: Sense::Ge,
            rhs: 0.0,
        });
    }
    for j in 0..deg - 1 {
        let mut terms = Vec::new();
        push_term(&mut terms, 1.0, vec![model.epigraph_var()]);
        push_term(&mut terms, -1.0, vec![model.boundary_cost_var(j)]);
        model.constraints.push(Constraint {
            family: Family::Epigraph,
            label: format!("epi_o_{j}"),
            row_index: j,
            terms,
            sense: Sense::Ge,
            rhs: 0.0,
        });
    }

    // Objective: sum p + sum o + (c - 1) t.
    for i in 0..deg {
        let var = model.stage_cost_var(i);
        push_term(&mut model.objective, 1.0, vec![var]);
    }
    for j in 0..deg - 1 {
        let var = model.boundary_cost_var(j);
        push_term(&mut model.objective, 1.0, vec![var]);
    }
    let t_var = model.epigraph_var();
    push_term(&mut model.objective, ctx.c as f64 - 1.0, vec![t_var]);
    Ok(model)
}

/// Build the single-stage model (`deg = 1`): objective `p_0`, one
/// computation row over strategy products, one memory row, strategy
/// selection. No placement, contiguity, boundary or epigraph variables.
pub fn build_qip(
    costs: &CostMatrices,
    graph: &ComputationGraph,
    mem_limit: f64,
) -> Result<MiqpModel> {
    check_shapes(costs, graph)?;
    let v = graph.nodes.len();
    let ns = costs.num_strategies();
    let mut model = MiqpModel {
        num_layers: v,
        deg: 1,
        num_strategies: ns,
        c: 1,
        edges: graph.edges.iter().map(|e| (e.src, e.dst)).collect(),
        costs: costs.clone(),
        mem_limits: vec![mem_limit],
        constraints: Vec::new(),
        objective: Vec::new(),
        has_placement: false,
    };

    let mut terms = Vec::new();
    for u in 0..v {
        for k in 0..ns {
            push_term(&mut terms, costs.a[u][k], vec![model.strat_var(u, k)]);
        }
    }
    for (e, &(u, w)) in model.edges.iter().enumerate() {
        for k in 0..ns {
            for l in 0..ns {
                push_term(
                    &mut terms,
                    costs.r[e][k][l],
                    vec![model.strat_var(u, k), model.strat_var(w, l)],
                );
            }
        }
    }
    push_term(&mut terms, -1.0, vec![model.stage_cost_var(0)]);
    model.constraints.push(Constraint {
        family: Family::ComputationStage,
        label: "comp_stage_0".to_string(),
        row_index: 0,
        terms,
        sense: Sense::Eq,
        rhs: 0.0,
    });

    let mut terms = Vec::new();
    for u in 0..v {
        for k in 0..ns {
            if costs.m[u][k].is_finite() {
                push_term(&mut terms, costs.m[u][k], vec![model.strat_var(u, k)]);
            }
        }
    }
    model.constraints.push(Constraint {
        family: Family::Memory,
        label: "mem_0".to_string(),
        row_index: 0,
        terms,
        sense: Sense::Le,
        rhs: mem_limit,
    });

    push_strategy_rows(&mut model);

    let p_var = model.stage_cost_var(0);
    push_term(&mut model.objective, 1.0, vec![p_var]);
    Ok(model)
}

/// Strategy-selection rows shared by both builders: one-hot per layer plus
/// explicit zero fixings for sentinel pairs.
fn push_strategy_rows(model: &mut MiqpModel) {
    let (v, ns) = (model.num_layers, model.num_strategies);
    for u in 0..v {
        let terms = (0..ns)
            .map(|k| Monomial {
                coeff: 1.0,
                vars: vec![model.strat_var(u, k)],
            })
            .collect();
        model.constraints.push(Constraint {
            family: Family::StrategySelection,
            label: format!("strat_{u}"),
            row_index: u,
            terms,
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    let sentinels: Vec<(usize, usize)> = (0..v)
        .flat_map(|u| (0..ns).map(move |k| (u, k)))
        .filter(|&(u, k)| !model.costs.m[u][k].is_finite())
        .collect();
    for (u, k) in sentinels {
        model.constraints.push(Constraint {
            family: Family::StrategySelection,
            label: format!("strat_fix_{u}_{k}"),
            row_index: u,
            terms: vec![Monomial {
                coeff: 1.0,
                vars: vec![model.strat_var(u, k)],
            }],
            sense: Sense::Eq,
            rhs: 0.0,
        });
    }
}

// ---------------------------------------------------------------------------
// Linearization
// ---------------------------------------------------------------------------

/// Definition of one AND (product) variable of the linearized model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDef {
    pub id: VarId,
    /// The binary factors, sorted by variable id.
    pub factors: Vec<VarId>,
    pub name: String,
}

/// A purely linear constraint row of the MILP.
#[derive(Debug, Clone, PartialEq)]
pub struct LinConstraint {
    /// `Some(family)` for rows inherited from the quadratic model, `None`
    /// for the AND-linking rows introduced by linearization.
    pub family: Option<Family>,
    pub label: String,
    /// Stage / boundary / layer index carried over from the source row
    /// (zero for AND rows).
    pub row_index: usize,
    pub terms: Vec<(f64, VarId)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// The linearized model. Variable ids `0..base_vars` coincide with the
/// quadratic model's layout; product variables follow.
#[derive(Debug, Clone)]
pub struct MilpModel {
    /// The quadratic model this was linearized from (kept for naming,
    /// dimensions, and evaluation).
    pub base: MiqpModel,
    pub products: Vec<ProductDef>,
    pub constraints: Vec<LinConstraint>,
    pub objective: Vec<(f64, VarId)>,
}

impl MilpModel {
    pub fn num_vars(&self) -> usize {
        self.base.num_vars() + self.products.len()
    }

    pub fn var_name(&self, id: VarId) -> String {
        if id < self.base.num_vars() {
            self.base.var_name(id)
        } else {
            self.products[id - self.base.num_vars()].name.clone()
        }
    }

    pub fn is_binary(&self, id: VarId) -> bool {
        id >= self.base.num_vars() || self.base.is_binary(id)
    }

    /// Evaluate at the same binary assignments accepted by
    /// [`MiqpModel::evaluate_bits`]: product variables take the product of
    /// their factors, then the defining rows determine `p`, `o`, and the
    /// pinned `t`.
    pub fn evaluate_bits(&self, values: &[f64]) -> ModelEval {
        let base_n = self.base.num_vars();
        let mut full = vec![0.0; self.num_vars()];
        full[..values.len().min(base_n)].copy_from_slice(&values[..values.len().min(base_n)]);
        for prod in &self.products {
            full[prod.id] = prod.factors.iter().map(|&f| full[f]).product();
        }
        let mut p = vec![0.0; self.base.deg];
        let mut o = vec![0.0; self.base.deg.saturating_sub(1)];
        for row in &self.constraints {
            let lin_sum = || -> f64 {
                row.terms
                    .iter()
                    .filter(|(_, v)| self.is_binary(*v))
                    .map(|(c, v)| c * full[*v])
                    .sum()
            };
            match row.family {
                Some(Family::ComputationStage) => p[row.row_index] = lin_sum(),
                Some(Family::CommunicationStage) => o[row.row_index] = lin_sum(),
                _ => {}
            }
        }
        let t = p
            .iter()
            .chain(o.iter())
            .fold(0.0f64, |acc, &v| acc.max(v));
        let objective =
            p.iter().sum::<f64>() + o.iter().sum::<f64>() + (self.base.c as f64 - 1.0) * t;
        ModelEval { p, o, t, objective }
    }
}

/// Replace every product of two or more binaries with an AND variable bound
/// by the standard constraints (`w <= factor` for each factor,
/// `w >= sum(factors) - (k-1)`), leaving a purely linear model whose
/// objective agrees with the quadratic model on every binary assignment.
pub fn linearize(model: &MiqpModel) -> MilpModel {
    let mut products: Vec<ProductDef> = Vec::new();
    let mut by_factors: BTreeMap<Vec<VarId>, VarId> = BTreeMap::new();
    let base_n = model.num_vars();
    let mut constraints: Vec<LinConstraint> = Vec::new();

    let mut product_var = |factors: &[VarId], products: &mut Vec<ProductDef>| -> VarId {
        if let Some(&id) = by_factors.get(factors) {
            return id;
        }
        let id = base_n + products.len();
        let name = product_name(model, factors);
        products.push(ProductDef {
            id,
            factors: factors.to_vec(),
            name,
        });
        by_factors.insert(factors.to_vec(), id);
        id
    };

    let mut lin_terms = |terms: &[Monomial], products: &mut Vec<ProductDef>| -> Vec<(f64, VarId)> {
        terms
            .iter()
            .map(|m| {
                let binaries: Vec<VarId> = m
                    .vars
                    .iter()
                    .copied()
                    .filter(|&v| model.is_binary(v))
                    .collect();
                if binaries.len() >= 2 {
                    debug_assert_eq!(binaries.len(), m.vars.len());
                    (m.coeff, product_var(&binaries, products))
                } else {
                    debug_assert_eq!(m.vars.len(), 1);
                    (m.coeff, m.vars[0])
                }
            })
            .collect()
    };

    for row in &model.constraints {
        let terms = lin_terms(&row.terms, &mut products);
        constraints.push(LinConstraint {
            family: Some(row.family),
            label: row.label.clone(),
            row_index: row.row_index,
            terms,
            sense: row.sense,
            rhs: row.rhs,
        });
    }
    let objective = lin_terms(&model.objective, &mut products);

    // AND-link rows, grouped per product in definition order.
    for prod in &products {
        for (idx, &f) in prod.factors.iter().enumerate() {
            constraints.push(LinConstraint {
                family: None,
                label: format!("and_ub_{}_{idx}", prod.name),
                row_index: 0,
                terms: vec![(1.0, prod.id), (-1.0, f)],
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
        let mut terms = vec![(1.0, prod.id)];
        for &f in &prod.factors {
            terms.push((-1.0, f));
        }
        constraints.push(LinConstraint {
            family: None,
            label: format!("and_lb_{}", prod.name),
            row_index: 0,
            terms,
            sense: Sense::Ge,
            rhs: -(prod.factors.len() as f64 - 1.0),
        });
    }

    MilpModel {
        base: model.clone(),
        products,
        constraints,
        objective,
    }
}

/// Naming scheme for product variables:
///
/// * `y_{u}_{i}_{k}` for `P_ui * S_uk`;
/// * `w_{u}_{v}_{i}_{k}_{l}` for a same-stage edge product
///   `P_ui * P_vi * S_uk * S_vl`;
/// * `wp_{u}_{v}_{i}_{ip}_{k}_{l}` for a cross-stage edge product
///   `P_ui * P_v,ip * S_uk * S_vl` (`ip > i`);
/// * `w_{u}_{v}_{k}_{l}` for the strategy-only products `S_uk * S_vl` of the
///   single-stage model;
/// * `and_{n}` as a generic fallback (not produced by the builders above).
fn product_name(model: &MiqpModel, factors: &[VarId]) -> String {
    let descs: Vec<VarDesc> = factors.iter().map(|&f| model.describe(f)).collect();
    match descs.as_slice() {
        [VarDesc::Place { layer: u, stage: i }, VarDesc::Strat { layer: u2, strat: k }]
            if u == u2 =>
        {
            format!("y_{u}_{i}_{k}")
        }
        [VarDesc::Place { layer: u, stage: i }, VarDesc::Place { layer: v, stage: i2 }, VarDesc::Strat { layer: u2, strat: k }, VarDesc::Strat { layer: v2, strat: l }]
            if u == u2 && v == v2 =>
        {
            if i == i2 {
                format!("w_{u}_{v}_{i}_{k}_{l}")
            } else {
                format!("wp_{u}_{v}_{i}_{i2}_{k}_{l}")
            }
        }
        [VarDesc::Strat { layer: u, strat: k }, VarDesc::Strat { layer: v, strat: l }] => {
            format!("w_{u}_{v}_{k}_{l}")
        }
        _ => format!("and_{}", factors.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("_")),
    }
}

// ---------------------------------------------------------------------------
// LP export
// ---------------------------------------------------------------------------

fn lp_terms(model: &MilpModel, terms: &[(f64, VarId)]) -> String {
    let mut out = String::new();
    for (idx, &(coeff, var)) in terms.iter().enumerate() {
        let name = model.var_name(var);
        let mag = coeff.abs();
        let part = if mag == 1.0 {
            name
        } else {
            format!("{mag} {name}")
        };
        if idx == 0 {
            if coeff < 0.0 {
                out.push_str("- ");
            }
        } else if coeff < 0.0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        out.push_str(&part);
    }
    if terms.is_empty() {
        out.push('0');
    }
    out
}

/// Write the linearized model in CPLEX LP text format.
///
/// Sections: a comment header, `Minimize`, `Subject To`, `Bounds` (continuous
/// variables, all with lower bound 0), `Binary`, `End`. Output is
/// byte-deterministic for identical models.
pub fn export_lp(model: &MilpModel, sink: &mut dyn Write) -> Result<()> {
    let base = &model.base;
    writeln!(
        sink,
        "\\ pipeline parallelism plan model: deg={} c={} layers={} strategies={} edges={}",
        base.deg,
        base.c,
        base.num_layers,
        base.num_strategies,
        base.edges.len()
    )?;
    writeln!(
        sink,
        "\\ variables: P_u_i (placement) S_u_k (strategy) Z_u_i (contiguity) y/w/wp (products) p_i o_j t"
    )?;
    writeln!(sink, "Minimize")?;
    writeln!(sink, " obj: {}", lp_terms(model, &model.objective))?;
    writeln!(sink, "Subject To")?;
    for row in &model.constraints {
        writeln!(
            sink,
            " {}: {} {} {}",
            row.label,
            lp_terms(model, &row.terms),
            row.sense.lp_symbol(),
            row.rhs
        )?;
    }
    writeln!(sink, "Bounds")?;
    for id in 0..model.num_vars() {
        if !model.is_binary(id) {
            writeln!(sink, " 0 <= {}", model.var_name(id))?;
        }
    }
    writeln!(sink, "Binary")?;
    for id in 0..model.num_vars() {
        if model.is_binary(id) {
            writeln!(sink, " {}", model.var_name(id))?;
        }
    }
    writeln!(sink, "End")?;
    Ok(())
}
