//! `uniplan`: command-line front end for the uniplan-core parallelism planner.
//!
//! Subcommands:
//!   * `plan`     — search pipeline configurations and write a plan document;
//!   * `validate` — recheck a plan document against its model and cluster
//!     profile, simulate it, and write an event trace;
//!   * `render`   — print an ASCII stage map and optionally draw an SVG Gantt
//!     chart from a previously written trace.
//!
//! Exit codes: 0 success, 1 bad input or usage, 2 globally infeasible
//! instance, 3 plan validation violations, 4 I/O failure. Set `UNIPLAN_LOG`
//! (e.g. `UNIPLAN_LOG=debug`) to control log verbosity.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod cmd_plan;
mod cmd_render;
mod cmd_validate;
mod util;

#[derive(Parser)]
#[command(name = "uniplan", version, about = "automatic intra- and inter-layer parallelism planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search parallel plans for a model on a cluster and report the best.
    Plan(PlanArgs),
    /// Recheck a plan document, simulate it, and write an event trace.
    Validate(ValidateArgs),
    /// Print a stage map of a plan; optionally draw an SVG Gantt chart.
    Render(RenderArgs),
}

#[derive(Args)]
pub struct PlanArgs {
    /// Computation-graph JSON produced by profiling the model.
    #[arg(long)]
    pub model: PathBuf,
    /// Cluster profile JSON (device memory, interconnect timings).
    #[arg(long)]
    pub profile: PathBuf,
    /// Mini-batch size per training iteration.
    #[arg(long)]
    pub batch: u64,
    /// Training precision: "fp32" or "fp16-mixed".
    #[arg(long, default_value = "fp32")]
    pub precision: String,
    /// Wall-clock budget in seconds for each configuration solve.
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
    /// Relative optimality-gap tolerance for each solve.
    #[arg(long, default_value_t = 1e-4)]
    pub gap: f64,
    /// Write the winning plan document to this path as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Export one CPLEX-LP file per swept configuration into this directory.
    #[arg(long, value_name = "DIR")]
    pub export_lp: Option<PathBuf>,
    /// Worker threads for the configuration sweep (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also print the raw cost matrices of the winning configuration.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Plan document JSON written by `uniplan plan --out`.
    #[arg(long)]
    pub plan: PathBuf,
    /// Computation-graph JSON the plan was built from.
    #[arg(long)]
    pub model: PathBuf,
    /// Cluster profile JSON the plan was built for.
    #[arg(long)]
    pub profile: PathBuf,
    /// Where to write the simulated event trace (default: plan path with a
    /// `.trace.json` extension).
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RenderArgs {
    /// Plan document JSON written by `uniplan plan --out`.
    #[arg(long)]
    pub plan: PathBuf,
    /// Event trace JSON written by `uniplan validate` (default: plan path
    /// with a `.trace.json` extension).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write an SVG Gantt chart of the trace to this path.
    #[arg(long, value_name = "SVG")]
    pub gantt: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    util::EXIT_OK
                }
                _ => util::EXIT_INPUT,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    env_logger::Builder::from_env(env_logger::Env::default().filter_or("UNIPLAN_LOG", "warn"))
        .format_timestamp(None)
        .try_init()
        .ok();

    let outcome = match &cli.command {
        Command::Plan(args) => cmd_plan::run(args),
        Command::Validate(args) => cmd_validate::run(args),
        Command::Render(args) => cmd_render::run(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(util::exit_code_for(&err))
        }
    }
}
