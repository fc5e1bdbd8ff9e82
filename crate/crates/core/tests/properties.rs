//! Property-based checks of the library's structural invariants:
//! communication primitives, cost-model shape, model/evaluator agreement,
//! solver optimality and determinism, and simulator bounds.

// Index loops here deliberately walk a prefix of a longer buffer.
#![allow(clippy::needless_range_loop)]

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uniplan_core::cost::{
    build_cost_matrices, layer_exec_cost, layer_memory, PlanContext, Precision, BP_FP_RATIO,
};
use uniplan_core::graph::{enumerate_strategies, is_contiguous, ComputationGraph, IntraStrategy};
use uniplan_core::miqp::{build_miqp, build_qip, export_lp, linearize, Family, MiqpModel};
use uniplan_core::profile::{
    allgather_time, allreduce_time, load_profile, overlap, synth_profile,
};
use uniplan_core::sim::{estimate_tpi, simulate_gpipe, stage_times_from, StageTimes};
use uniplan_core::solver::{
    direct_eval, enumerate_ordered_placements, solve_exact, solve_exhaustive, SolveBudget,
};
use uniplan_core::uop::{factors, unified_optimize, UopOptions};

// ---------------------------------------------------------------------------
// Communication primitives
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    /// Overlapped time never beats the longer of the two intervals and never
    /// exceeds their serial sum, and the operands commute.
    #[test]
    fn overlap_is_bounded_and_symmetric(
        a in 0.0..1e3f64,
        b in 0.0..1e3f64,
        k in 0.0..=1.0f64,
    ) {
        let t = overlap(a, b, k);
        prop_assert!(t >= a.max(b) - 1e-12);
        prop_assert!(t <= a + b + 1e-12);
        prop_assert_eq!(t.to_bits(), overlap(b, a, k).to_bits());
    }

    /// Ring all-reduce time grows with volume, and (for a uniform profile)
    /// with group size; singleton groups cost nothing.
    #[test]
    fn allreduce_time_is_monotone(
        volume in 0.0..1e9f64,
        extra in 0.0..1e9f64,
        bw in 1e6..1e12f64,
        latency in 0.0..1e-3f64,
    ) {
        let p = synth_profile(8, bw, latency, 1e12, 0.5);
        for g in [2u32, 4, 8] {
            let lo = allreduce_time(volume, g, &p).unwrap();
            let hi = allreduce_time(volume + extra, g, &p).unwrap();
            prop_assert!(hi >= lo);
        }
        let t2 = allreduce_time(volume, 2, &p).unwrap();
        let t4 = allreduce_time(volume, 4, &p).unwrap();
        let t8 = allreduce_time(volume, 8, &p).unwrap();
        prop_assert!(t2 <= t4 && t4 <= t8);
        prop_assert_eq!(allreduce_time(volume, 1, &p).unwrap(), 0.0);
    }
}

/// `load_profile(to_json(p))` is the identity, including heterogeneous
/// per-device memory and per-group bandwidth tables.
#[test]
fn profile_round_trips_through_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let sizes = [1u32, 2, 4, 6, 8, 12];
    for trial in 0..60 {
        let n = sizes[rng.random_range(0..sizes.len())];
        let mut p = synth_profile(
            n,
            rng.random_range(1e8..1e11),
            rng.random_range(0.0..1e-4),
            rng.random_range(1e9..1e12),
            rng.random_range(0.0..1.0),
        );
        for m in &mut p.mem_bytes_per_device {
            *m *= rng.random_range(0.5..1.5);
        }
        for bw in p.allreduce_bw.values_mut() {
            *bw *= rng.random_range(0.5..1.5);
        }
        if n > 1 {
            p.p2p_bw.insert("0".to_string(), rng.random_range(1e8..1e10));
        }
        p.validate().unwrap_or_else(|e| panic!("trial {trial}: generated profile invalid: {e}"));
        let back = load_profile(&p.to_json()).unwrap();
        assert_eq!(p, back, "trial {trial}: profile changed across JSON round trip");
    }
}

// ---------------------------------------------------------------------------
// Cost model shape
// ---------------------------------------------------------------------------

/// With communication silenced, the compute part of every execution-cost
/// entry doubles when the mini-batch doubles (gradient sync is charged per
/// iteration and is subtracted out before comparing).
#[test]
fn exec_cost_compute_component_is_linear_in_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    // Zero latency: a zero-volume collective then takes zero time, so the
    // only batch-independent term left in A is the gradient sync.
    let profile = synth_profile(4, 1e9, 0.0, 1e18, 0.7);
    for trial in 0..40 {
        let mut graph = common::random_chain(&mut rng, 3);
        for node in &mut graph.nodes {
            node.tp_comm_bytes_per_sample = 0.0;
        }
        let c = [1u32, 2, 4][rng.random_range(0..3)];
        let ctx1 = PlanContext::new(1, c, 8 * c as u64, 4, Precision::Fp32).unwrap();
        let ctx2 = PlanContext::new(1, c, 16 * c as u64, 4, Precision::Fp32).unwrap();
        let costs1 = build_cost_matrices(&graph, &profile, &ctx1).unwrap();
        let costs2 = build_cost_matrices(&graph, &profile, &ctx2).unwrap();
        for u in 0..graph.nodes.len() {
            for (k, s) in costs1.strategies.strategies.iter().enumerate() {
                let grad_bytes = graph.nodes[u].param_bytes / s.tp as f64;
                let sync = if s.dp <= 1 {
                    0.0
                } else if s.fsdp_shard {
                    3.0 * allgather_time(grad_bytes, s.dp, &profile).unwrap()
                } else {
                    allreduce_time(grad_bytes, s.dp, &profile).unwrap()
                };
                let comp1 = costs1.a[u][k] - sync / c as f64;
                let comp2 = costs2.a[u][k] - sync / c as f64;
                assert!(
                    (comp2 - 2.0 * comp1).abs() <= 1e-9 * comp1.abs().max(1e-12),
                    "trial {trial} layer {u} strategy {}: compute {comp1} did not double ({comp2})",
                    s.tag()
                );
            }
        }
    }
}

/// Per-device memory never grows when the tensor shard count or the model
/// state shard factor grows (activation tables scale as 1/tp here).
#[test]
fn memory_is_non_increasing_in_shard_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xCAFE);
    for trial in 0..60 {
        let layer = common::layer(
            0,
            rng.random_range(1e-3..1e-2),
            rng.random_range(1e5..1e8),
            rng.random_range(1e3..1e6),
        );
        let precision = if rng.random::<bool>() { Precision::Fp32 } else { Precision::Fp16Mixed };
        let ctx = PlanContext::new(1, 2, 8, 8, precision).unwrap();
        let mem = |dp: u32, tp: u32, fsdp: bool| {
            layer_memory(&layer, &IntraStrategy { dp, tp, fsdp_shard: fsdp }, &ctx)
                .unwrap()
                .unwrap()
        };
        // Larger tp at fixed (dp, fs).
        let by_tp: Vec<f64> = [1u32, 2, 4].iter().map(|&tp| mem(2, tp, false)).collect();
        assert!(
            by_tp.windows(2).all(|w| w[1] <= w[0] + 1e-9),
            "trial {trial}: memory increased with tp: {by_tp:?}"
        );
        // Sharding model states (fs: 1 -> dp) at fixed (dp, tp).
        for tp in [1u32, 2] {
            assert!(
                mem(4, tp, true) <= mem(4, tp, false) + 1e-9,
                "trial {trial}: FSDP increased memory at tp={tp}"
            );
        }
        // Larger fs (and dp) under FSDP.
        assert!(mem(4, 1, true) <= mem(2, 1, true) + 1e-9, "trial {trial}: fs=4 beat fs=2");
    }
}

/// Same-stage resharding between identical activation layouts is exactly
/// zero, FSDP notwithstanding; in particular every diagonal entry is zero.
#[test]
fn resharding_vanishes_for_identical_layouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1CE);
    for _ in 0..20 {
        let graph = common::random_dag(&mut rng, 4);
        let profile = synth_profile(8, 1e9, 1e-6, 1e18, 0.5);
        let ctx = PlanContext::new(1, 2, 16, 8, Precision::Fp32).unwrap();
        let costs = build_cost_matrices(&graph, &profile, &ctx).unwrap();
        let strategies = &costs.strategies.strategies;
        for e in 0..costs.r.len() {
            for (k, sk) in strategies.iter().enumerate() {
                assert_eq!(costs.r[e][k][k], 0.0);
                for (l, sl) in strategies.iter().enumerate() {
                    if sk.same_layout(sl) {
                        assert_eq!(
                            costs.r[e][k][l],
                            0.0,
                            "edge {e}: same layout {} -> {} resharded",
                            sk.tag(),
                            sl.tag()
                        );
                    }
                }
            }
        }
    }
}

/// With communication fully silenced the execution cost is forward plus
/// backward compute, and backward is exactly twice forward.
#[test]
fn backward_compute_is_twice_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
    let profile = synth_profile(4, 1e9, 0.0, 1e18, 0.3);
    for trial in 0..40 {
        let mut layer = common::layer(
            0,
            rng.random_range(1e-3..5e-2),
            rng.random_range(1e5..1e7),
            rng.random_range(1e3..1e5),
        );
        layer.tp_comm_bytes_per_sample = 0.0;
        let c = [1u32, 2][rng.random_range(0..2)];
        let ctx = PlanContext::new(1, c, 8 * c as u64, 4, Precision::Fp32).unwrap();
        for tp in [1u32, 2, 4] {
            let s = IntraStrategy { dp: 1, tp, fsdp_shard: false };
            let a = layer_exec_cost(&layer, &s, &ctx, &profile).unwrap().unwrap();
            let fp = 8.0 * layer.fwd_time_per_sample[&tp];
            let expected = fp + BP_FP_RATIO * fp;
            assert!(
                (a - expected).abs() <= 1e-12 * expected,
                "trial {trial} tp={tp}: cost {a} != fp + 2 fp = {expected}"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Strategy space
// ---------------------------------------------------------------------------

/// For g = 2^k devices the space holds 2k + 1 strategies, sorted ascending
/// by (dp, tp, fsdp), every product dp * tp equals g, and FSDP variants only
/// appear for dp >= 2.
#[test]
fn strategy_space_size_and_order() {
    for (g, expected) in [(1u32, 1usize), (2, 3), (4, 5), (8, 7), (16, 9)] {
        let space = enumerate_strategies(g);
        assert_eq!(space.len(), expected, "g={g}");
        assert_eq!(space.per_stage_devices, g);
        for s in &space.strategies {
            assert_eq!(s.dp * s.tp, g, "g={g}: {}", s.tag());
            assert!(!s.fsdp_shard || s.dp >= 2);
        }
        let keys: Vec<_> = space
            .strategies
            .iter()
            .map(|s| (s.dp, s.tp, s.fsdp_shard))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(keys, sorted, "g={g}: not sorted/deduplicated");
    }
}

// ---------------------------------------------------------------------------
// Model construction and evaluators
// ---------------------------------------------------------------------------

/// Context for an instance grid shared by several model-level tests.
fn small_instance(
    rng: &mut ChaCha8Rng,
    deg: u32,
    n: u32,
    batch: u64,
    c: u32,
    mem_limit: f64,
) -> (ComputationGraph, PlanContext, MiqpModel) {
    let v = rng.random_range(deg as usize..=5.max(deg as usize));
    let graph = if rng.random::<bool>() {
        common::random_chain(rng, v)
    } else {
        common::random_dag(rng, v)
    };
    let profile = synth_profile(n, 1e9, 1e-6, 1e18, 0.5);
    let ctx = PlanContext::new(deg, c, batch, n, Precision::Fp32).unwrap();
    let costs = build_cost_matrices(&graph, &profile, &ctx).unwrap();
    let model = if deg == 1 {
        build_qip(&costs, &graph, mem_limit).unwrap()
    } else {
        build_miqp(&costs, &graph, &ctx, &vec![mem_limit; deg as usize]).unwrap()
    };
    (graph, ctx, model)
}

/// Fill a full variable vector for one (placement, strategies) pair, with Z
/// built from reachability: `Z[u][i] = 1` iff `u` sits on stage `i` or
/// reaches some layer on stage `i`.
fn reference_values(
    model: &MiqpModel,
    graph: &ComputationGraph,
    stage_of: &[usize],
    strategy_of: &[usize],
) -> Vec<f64> {
    let v = graph.nodes.len();
    let deg = model.deg;
    let mut values = vec![0.0; model.num_vars()];
    for u in 0..v {
        values[model.strat_var(u, strategy_of[u])] = 1.0;
    }
    if model.has_placement {
        let reach = graph.reachability();
        for u in 0..v {
            values[model.place_var(u, stage_of[u])] = 1.0;
            for i in 0..deg {
                let z = stage_of[u] == i || (0..v).any(|w| stage_of[w] == i && reach[u][w]);
                values[model.aux_var(u, i)] = if z { 1.0 } else { 0.0 };
            }
        }
    }
    let eval = direct_eval(model, stage_of, strategy_of);
    for (i, &p) in eval.p.iter().enumerate() {
        values[model.stage_cost_var(i)] = p;
    }
    if model.has_placement {
        for (j, &o) in eval.o.iter().enumerate() {
            values[model.boundary_cost_var(j)] = o;
        }
        values[model.epigraph_var()] = eval.t;
    }
    values
}

/// For every ordered placement, the per-stage sets are contiguous and the
/// reachability-derived Z satisfies every order-preserving row.
#[test]
fn reachability_z_satisfies_order_preserving_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0DDB1);
    for trial in 0..30 {
        let deg = rng.random_range(2u32..=3);
        let (graph, _ctx, model) = small_instance(&mut rng, deg, deg, 4, 2, f64::INFINITY);
        let placements = enumerate_ordered_placements(&model);
        assert!(!placements.is_empty(), "trial {trial}: no ordered placements");
        for stage_of in &placements {
            for i in 0..deg as usize {
                let members: Vec<usize> = (0..graph.nodes.len())
                    .filter(|&u| stage_of[u] == i)
                    .collect();
                assert!(
                    is_contiguous(&graph, &members).unwrap(),
                    "trial {trial}: ordered placement {stage_of:?} has non-contiguous stage {i}"
                );
            }
            let strategy_of = vec![0usize; graph.nodes.len()];
            let values = reference_values(&model, &graph, stage_of, &strategy_of);
            for row in &model.constraints {
                if row.family == Family::OrderPreserving {
                    assert!(
                        model.row_satisfied(row, &values),
                        "trial {trial}: row {} rejected placement {stage_of:?}",
                        row.label
                    );
                }
            }
        }
    }
}

/// A feasible reference assignment satisfies every constraint row, and the
/// row-based evaluator agrees with the direct cost-matrix evaluation.
#[test]
fn all_rows_accept_a_feasible_reference_assignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED5);
    for trial in 0..25 {
        let deg = rng.random_range(2u32..=3);
        let n = 2 * deg;
        let (graph, _ctx, model) = small_instance(&mut rng, deg, n, 4, 2, f64::INFINITY);
        let placements = enumerate_ordered_placements(&model);
        let stage_of = placements[rng.random_range(0..placements.len())].clone();
        let strategy_of: Vec<usize> = (0..graph.nodes.len())
            .map(|u| {
                let feasible: Vec<usize> = (0..model.num_strategies)
                    .filter(|&k| model.costs.is_feasible(u, k))
                    .collect();
                feasible[rng.random_range(0..feasible.len())]
            })
            .collect();
        let values = reference_values(&model, &graph, &stage_of, &strategy_of);
        for row in &model.constraints {
            assert!(
                model.row_satisfied(row, &values),
                "trial {trial}: row {} rejected a feasible assignment \
                 (stages {stage_of:?}, strategies {strategy_of:?})",
                row.label
            );
        }
        let by_rows = model.evaluate_bits(&values);
        let by_matrices = direct_eval(&model, &stage_of, &strategy_of);
        assert_eq!(by_rows.p, by_matrices.p, "trial {trial}: stage costs disagree");
        assert_eq!(by_rows.o, by_matrices.o, "trial {trial}: boundary costs disagree");
        assert_eq!(by_rows.t.to_bits(), by_matrices.t.to_bits(), "trial {trial}");
        assert_eq!(
            by_rows.objective.to_bits(),
            by_matrices.objective.to_bits(),
            "trial {trial}: objectives disagree"
        );
        let max_po = by_rows
            .p
            .iter()
            .chain(by_rows.o.iter())
            .fold(0.0f64, |acc, &x| acc.max(x));
        assert_eq!(by_rows.t, max_po, "trial {trial}: epigraph is not the max");
    }
}

/// The quadratic and linearized models agree exactly on arbitrary binary
/// vectors — including ones that violate one-hot and ordering rows.
#[test]
fn linearized_objective_matches_quadratic_on_random_bits() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB17B17);
    for trial in 0..12 {
        let deg = rng.random_range(1u32..=3);
        let n = if deg == 1 { 4 } else { deg };
        let (_graph, _ctx, model) = small_instance(&mut rng, deg, n, 4, 2, f64::INFINITY);
        let milp = linearize(&model);
        for _ in 0..40 {
            let mut values = vec![0.0; milp.num_vars()];
            for id in 0..model.num_vars() {
                if model.is_binary(id) && rng.random::<bool>() {
                    values[id] = 1.0;
                }
            }
            let quad = model.evaluate_bits(&values);
            let lin = milp.evaluate_bits(&values);
            assert_eq!(quad.p, lin.p, "trial {trial}: p disagrees");
            assert_eq!(quad.o, lin.o, "trial {trial}: o disagrees");
            assert_eq!(
                quad.objective.to_bits(),
                lin.objective.to_bits(),
                "trial {trial}: objective disagrees"
            );
        }
        // The export is byte-deterministic.
        let mut first = Vec::new();
        let mut second = Vec::new();
        export_lp(&milp, &mut first).unwrap();
        export_lp(&milp, &mut second).unwrap();
        assert_eq!(first, second, "trial {trial}: LP export not deterministic");
    }
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

/// Branch-and-bound returns exactly the exhaustive optimum (same objective
/// bits, same assignment), reports an admissible bound, and is
/// deterministic run to run. Infeasible instances agree on infeasibility.
#[test]
fn exact_solver_matches_oracle_with_admissible_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x04AC1E);
    for trial in 0..30 {
        let n = [2u32, 4][rng.random_range(0..2)];
        let divisors: Vec<u32> = (1..=n).filter(|d| n.is_multiple_of(*d)).collect();
        let deg = divisors[rng.random_range(0..divisors.len())];
        let batch = [2u64, 4][rng.random_range(0..2)];
        let c_divs: Vec<u32> = (1..=batch as u32).filter(|&c| batch.is_multiple_of(c as u64)).collect();
        let c = c_divs[rng.random_range(0..c_divs.len())];
        let limit = if trial % 5 == 0 { rng.random_range(1e7..5e7) } else { 1e18 };
        let (_graph, _ctx, model) = small_instance(&mut rng, deg.max(1), n, batch, c, limit);

        let exact = solve_exact(&model, &SolveBudget::exact()).unwrap();
        let oracle = solve_exhaustive(&model).unwrap();
        match (&exact.best, &oracle.best) {
            (Some(a), Some(b)) => {
                assert_eq!(
                    a.objective.to_bits(),
                    b.objective.to_bits(),
                    "trial {trial}: objective mismatch {} vs {}",
                    a.objective,
                    b.objective
                );
                assert_eq!(a.stage_of, b.stage_of, "trial {trial}");
                assert_eq!(a.strategy_of, b.strategy_of, "trial {trial}");
                assert!(
                    exact.stats.best_bound <= a.objective + 1e-12,
                    "trial {trial}: bound {} above incumbent {}",
                    exact.stats.best_bound,
                    a.objective
                );
            }
            (None, None) => {}
            (a, b) => panic!(
                "trial {trial}: feasibility disagreement (exact {:?}, oracle {:?})",
                a.is_some(),
                b.is_some()
            ),
        }

        let again = solve_exact(&model, &SolveBudget::exact()).unwrap();
        match (&exact.best, &again.best) {
            (Some(a), Some(b)) => {
                assert_eq!(a.objective.to_bits(), b.objective.to_bits());
                assert_eq!(a.stage_of, b.stage_of);
                assert_eq!(a.strategy_of, b.strategy_of);
            }
            (None, None) => {}
            _ => panic!("trial {trial}: solver not deterministic"),
        }
    }
}

// ---------------------------------------------------------------------------
// Unified sweep
// ---------------------------------------------------------------------------

/// The sweep winner equals the minimum over all swept configurations of the
/// exhaustive per-configuration optimum, with ties broken toward smaller
/// (deg, c).
#[test]
fn sweep_winner_matches_per_config_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x53EE9);
    for trial in 0..6 {
        let v = rng.random_range(3usize..=4);
        let graph = if trial % 2 == 0 {
            common::random_chain(&mut rng, v)
        } else {
            common::random_dag(&mut rng, v)
        };
        let n = 4u32;
        let batch = 4u64;
        let profile = synth_profile(n, 1e9, 1e-6, 1e18, 0.5);

        let mut configs = vec![(1u32, 1u32)];
        for &deg in &factors(n as u64) {
            for &c in &factors(batch) {
                configs.push((deg as u32, c as u32));
            }
        }

        let mut best: Option<(f64, u32, u32)> = None;
        for &(deg, c) in &configs {
            let ctx = PlanContext::new(deg, c, batch, n, Precision::Fp32).unwrap();
            let costs = match build_cost_matrices(&graph, &profile, &ctx) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let model = if deg == 1 {
                build_qip(&costs, &graph, 1e18).unwrap()
            } else {
                build_miqp(&costs, &graph, &ctx, &vec![1e18; deg as usize]).unwrap()
            };
            if let Some(a) = solve_exhaustive(&model).unwrap().best {
                let key = (a.objective, deg, c);
                let better = match &best {
                    None => true,
                    Some((obj, bd, bc)) => {
                        a.objective < *obj
                            || (a.objective == *obj && (deg, c) < (*bd, *bc))
                    }
                };
                if better {
                    best = Some(key);
                }
            }
        }
        let (expect_obj, expect_deg, expect_c) =
            best.expect("at least one configuration must be feasible");

        let result = unified_optimize(
            &graph,
            &profile,
            batch,
            Precision::Fp32,
            &UopOptions {
                budget: SolveBudget::exact(),
                use_previous_best_cutoff: false,
                parallel: false,
            },
        )
        .unwrap();
        assert_eq!(result.plan.tpi_estimate_s.to_bits(), expect_obj.to_bits(), "trial {trial}");
        assert_eq!((result.plan.deg, result.plan.c), (expect_deg, expect_c), "trial {trial}");
        assert_eq!(result.configs.len(), configs.len(), "trial {trial}");
    }
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    /// With no backward work the pipeline is a flow shop with identical
    /// per-resource service times, whose makespan has a closed form: total
    /// work plus (c - 1) repeats of the bottleneck.
    #[test]
    fn forward_only_makespan_has_flow_shop_closed_form(
        (fwd, fwd_comm, c) in (1usize..=5).prop_flat_map(|deg| (
            prop::collection::vec(0.0..0.1f64, deg),
            prop::collection::vec(0.0..0.1f64, deg - 1),
            1u32..=8,
        )),
    ) {
        let deg = fwd.len();
        let times = StageTimes {
            fwd: fwd.clone(),
            bwd: vec![0.0; deg],
            fwd_comm: fwd_comm.clone(),
            bwd_comm: vec![0.0; deg.saturating_sub(1)],
        };
        let trace = simulate_gpipe(&times, c).unwrap();
        let total: f64 = fwd.iter().chain(fwd_comm.iter()).sum();
        let bottleneck = fwd.iter().chain(fwd_comm.iter()).fold(0.0f64, |a, &x| a.max(x));
        let expected = total + (c as f64 - 1.0) * bottleneck;
        prop_assert!((trace.makespan - expected).abs() <= 1e-9,
            "makespan {} vs closed form {}", trace.makespan, expected);
    }

    /// The analytic iteration-time estimate never exceeds the simulated
    /// makespan, for arbitrary splits of stage time into forward/backward.
    #[test]
    fn estimate_never_exceeds_makespan(
        (fwd, bwd, fwd_comm, bwd_comm, c) in (1usize..=5).prop_flat_map(|deg| (
            prop::collection::vec(0.0..0.1f64, deg),
            prop::collection::vec(0.0..0.1f64, deg),
            prop::collection::vec(0.0..0.1f64, deg - 1),
            prop::collection::vec(0.0..0.1f64, deg - 1),
            1u32..=8,
        )),
    ) {
        let p: Vec<f64> = fwd.iter().zip(&bwd).map(|(f, b)| f + b).collect();
        let o: Vec<f64> = fwd_comm.iter().zip(&bwd_comm).map(|(f, b)| f + b).collect();
        let estimate = estimate_tpi(&p, &o, c);
        let times = StageTimes { fwd, bwd, fwd_comm, bwd_comm };
        let trace = simulate_gpipe(&times, c).unwrap();
        prop_assert!(estimate <= trace.makespan + 1e-9,
            "estimate {} above makespan {}", estimate, trace.makespan);
    }

    /// When each resource's forward:backward split follows the global 1:2
    /// compute ratio, the estimate is exact.
    #[test]
    fn estimate_is_exact_for_proportional_splits(
        (p, o, c) in (1usize..=5).prop_flat_map(|deg| (
            prop::collection::vec(0.0..0.1f64, deg),
            prop::collection::vec(0.0..0.1f64, deg - 1),
            1u32..=8,
        )),
    ) {
        let estimate = estimate_tpi(&p, &o, c);
        let times = stage_times_from(&p, &o);
        let trace = simulate_gpipe(&times, c).unwrap();
        prop_assert!((trace.makespan - estimate).abs() <= 1e-9 * trace.makespan.max(1.0),
            "makespan {} vs estimate {}", trace.makespan, estimate);
    }
}
