//! `uniplan plan`: run the configuration sweep and report the winner.

use std::path::Path;

use uniplan_core::cost::{build_cost_matrices, PlanContext, Precision};
use uniplan_core::graph::ComputationGraph;
use uniplan_core::miqp::{build_miqp, build_qip, export_lp, linearize};
use uniplan_core::plan::PlanDocument;
use uniplan_core::profile::{load_profile, ClusterProfile};
use uniplan_core::solver::SolveBudget;
use uniplan_core::uop::{
    stage_memory_limits, sweep_configs, unified_optimize, UopOptions, UopResult,
};
use uniplan_core::{Error, Result};

use crate::util;
use crate::PlanArgs;

pub fn run(args: &PlanArgs) -> Result<u8> {
    if args.batch == 0 {
        return Err(Error::InvalidInput("batch must be >= 1".to_string()));
    }
    let model_text = util::read_text(&args.model)?;
    let graph = ComputationGraph::from_json(&model_text)?;
    let profile_text = util::read_text(&args.profile)?;
    let profile = load_profile(&profile_text)?;
    let precision: Precision = args.precision.parse()?;
    if args.time_limit <= 0.0 || args.time_limit.is_nan() {
        return Err(Error::InvalidInput(format!(
            "time limit must be positive, got {}",
            args.time_limit
        )));
    }
    if args.gap < 0.0 || !args.gap.is_finite() {
        return Err(Error::InvalidInput(format!(
            "gap must be a non-negative number, got {}",
            args.gap
        )));
    }

    let options = UopOptions {
        budget: SolveBudget {
            time_limit_s: args.time_limit,
            gap_tol: args.gap,
            previous_best: None,
        },
        use_previous_best_cutoff: true,
        parallel: true,
    };
    log::info!(
        "planning {} layers on {} devices, mini-batch {}, precision {precision}",
        graph.num_layers(),
        profile.n,
        args.batch
    );

    let sweep = || unified_optimize(&graph, &profile, args.batch, precision, &options);
    let result = match args.jobs {
        None => sweep()?,
        Some(jobs) if jobs >= 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot build a {jobs}-thread pool: {e}")))?;
            pool.install(sweep)?
        }
        Some(_) => return Err(Error::InvalidInput("jobs must be >= 1".to_string())),
    };

    let doc = PlanDocument::from_plan(
        &result.plan,
        &graph,
        &model_text,
        &profile_text,
        args.batch,
        profile.n,
        precision,
        result.total_wall_time_s,
    );
    print_summary(&doc, &result, &profile);

    if args.raw {
        print_raw_matrices(&graph, &profile, &result, args.batch, precision)?;
    }
    if let Some(dir) = &args.export_lp {
        let written = export_all_lps(&graph, &profile, args.batch, precision, dir)?;
        println!("exported {written} LP files to {}", dir.display());
    }
    if let Some(out) = &args.out {
        util::write_text(out, &doc.to_json())?;
        println!("plan written to {}", out.display());
    }
    Ok(util::EXIT_OK)
}

/// The headline summary: chosen configuration plus a per-stage table with
/// compute cost, memory use, and headroom against the stage limit.
fn print_summary(doc: &PlanDocument, result: &UopResult, profile: &ClusterProfile) {
    println!(
        "plan: {} stage(s) x {} device(s), {} micro-batch(es) of {} sample(s), precision {}",
        doc.stage_count, doc.per_stage_devices, doc.micro_batches, doc.micro_batch_size, doc.precision
    );
    println!(
        "estimated iteration time: {} ms   (sweep: {} configurations in {:.2} s)",
        util::fmt_ms(doc.tpi_estimate_s),
        result.configs.len(),
        doc.provenance.wall_time_s
    );
    println!();

    let limits = stage_memory_limits(profile, doc.stage_count);
    println!(
        "{:>5}  {:<10} {:<9} {:<18} {:>12} {:>11} {:>11} {:>9}",
        "stage", "layers", "devices", "strategies", "p/micro(ms)", "mem(GiB)", "limit(GiB)", "headroom"
    );
    for stage in &doc.stages {
        let tags: Vec<String> = stage
            .layers
            .iter()
            .map(|&u| {
                let l = &doc.layers[u];
                util::strategy_tag(l.dp, l.tp, l.fsdp)
            })
            .collect();
        let strategies = if tags.is_empty() {
            "-".to_string()
        } else if tags.iter().all(|t| t == &tags[0]) {
            format!("{} x{}", tags[0], tags.len())
        } else {
            tags.join(",")
        };
        let devices = if stage.devices.len() == 1 {
            format!("{}", stage.devices[0])
        } else {
            format!("{}-{}", stage.devices[0], stage.devices[stage.devices.len() - 1])
        };
        let limit = limits[stage.index];
        let headroom = 100.0 * (limit - stage.memory_bytes) / limit;
        println!(
            "{:>5}  {:<10} {:<9} {:<18} {:>12} {:>11} {:>11} {:>8.1}%",
            stage.index,
            util::layer_list(&stage.layers),
            devices,
            strategies,
            util::fmt_ms(stage.compute_s),
            util::fmt_gib(stage.memory_bytes),
            util::fmt_gib(limit),
            headroom
        );
    }
    if !doc.boundaries.is_empty() {
        println!();
        println!("{:>8}  {:>12}", "boundary", "o/micro(ms)");
        for b in &doc.boundaries {
            println!("{:>8}  {:>12}", b.index, util::fmt_ms(b.comm_s));
        }
    }
}

/// `--raw`: dump the winning configuration's cost matrices as JSON.
fn print_raw_matrices(
    graph: &ComputationGraph,
    profile: &ClusterProfile,
    result: &UopResult,
    batch: u64,
    precision: Precision,
) -> Result<()> {
    let ctx = PlanContext::new(result.plan.deg, result.plan.c, batch, profile.n, precision)?;
    let costs = build_cost_matrices(graph, profile, &ctx)?;
    println!();
    println!("raw cost matrices (deg={} c={}):", result.plan.deg, result.plan.c);
    println!("{}", serde_json::to_string_pretty(&costs).expect("matrices serialize"));
    Ok(())
}

/// `--export-lp`: write one linearized model per swept configuration.
fn export_all_lps(
    graph: &ComputationGraph,
    profile: &ClusterProfile,
    batch: u64,
    precision: Precision,
    dir: &Path,
) -> Result<usize> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
    let mut written = 0usize;
    for (deg, c) in sweep_configs(profile.n, batch) {
        let ctx = PlanContext::new(deg, c, batch, profile.n, precision)?;
        let costs = match build_cost_matrices(graph, profile, &ctx) {
            Ok(costs) => costs,
            // A configuration whose micro-batch no strategy can serve has no
            // model; it is skipped, matching the sweep's behavior.
            Err(Error::NoFeasibleStrategy { .. }) => continue,
            Err(e) => return Err(e),
        };
        let limits = stage_memory_limits(profile, deg);
        let model = if deg == 1 {
            build_qip(&costs, graph, limits[0])?
        } else {
            build_miqp(&costs, graph, &ctx, &limits)?
        };
        let milp = linearize(&model);
        let mut buf = Vec::new();
        export_lp(&milp, &mut buf)?;
        util::write_bytes(&dir.join(format!("deg{deg}_c{c}.lp")), &buf)?;
        written += 1;
    }
    Ok(written)
}
