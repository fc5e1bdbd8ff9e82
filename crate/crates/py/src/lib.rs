//! Python bindings for the uniplan planner.
//!
//! The module mirrors the command-line pipeline: [`plan`] searches for the
//! best parallel execution plan, [`validate`] rechecks a plan against its
//! inputs and simulates it, and [`simulate`] runs the pipeline simulator on
//! explicit stage timings. Model, profile, and trace payloads cross the
//! boundary as JSON strings — the same documents the CLI reads and writes —
//! so Python callers can `json.loads` them into plain dicts.
//!
//! Errors surface as `ValueError` for malformed inputs, `IOError` for I/O
//! failures, and the module-level `InfeasibleError` when no configuration
//! fits the cluster.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;

use uniplan_core::cost::Precision;
use uniplan_core::graph::{enumerate_strategies, ComputationGraph};
use uniplan_core::plan::{revalidate, PlanDocument, Revalidation};
use uniplan_core::profile::load_profile;
use uniplan_core::sim::{simulate_gpipe, StageTimes};
use uniplan_core::solver::SolveBudget;
use uniplan_core::uop::{sweep_configs, unified_optimize, UopOptions};
use uniplan_core::Error;

create_exception!(
    uniplan_py,
    InfeasibleError,
    PyException,
    "No parallel configuration satisfies the cluster's memory limits."
);

fn to_py_err(err: Error) -> PyErr {
    match &err {
        Error::Infeasible(_) => InfeasibleError::new_err(err.to_string()),
        Error::Io(_) => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// A finished parallel plan. Scalar facts are exposed as properties; the
/// full per-layer / per-stage breakdown is available via `to_json()`.
#[pyclass(frozen)]
struct Plan {
    doc: PlanDocument,
}

#[pymethods]
impl Plan {
    /// Parse a plan document previously produced by `plan()` or the CLI.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Plan {
            doc: PlanDocument::from_json(text).map_err(to_py_err)?,
        })
    }

    /// The full plan document as pretty-printed JSON (byte-identical to the
    /// CLI's `--out` file for the same inputs, modulo planning wall time).
    fn to_json(&self) -> String {
        self.doc.to_json()
    }

    /// Number of pipeline stages.
    #[getter]
    fn stage_count(&self) -> u32 {
        self.doc.stage_count
    }

    /// Number of micro-batches per training iteration.
    #[getter]
    fn micro_batches(&self) -> u32 {
        self.doc.micro_batches
    }

    /// Samples per micro-batch.
    #[getter]
    fn micro_batch_size(&self) -> u64 {
        self.doc.micro_batch_size
    }

    /// Samples per training iteration.
    #[getter]
    fn mini_batch(&self) -> u64 {
        self.doc.mini_batch
    }

    /// Total devices in the cluster the plan targets.
    #[getter]
    fn devices(&self) -> u32 {
        self.doc.devices
    }

    /// Devices assigned to each pipeline stage.
    #[getter]
    fn per_stage_devices(&self) -> u32 {
        self.doc.per_stage_devices
    }

    /// Estimated seconds per training iteration (the solver objective).
    #[getter]
    fn tpi_estimate_s(&self) -> f64 {
        self.doc.tpi_estimate_s
    }

    /// Training precision, `"fp32"` or `"fp16-mixed"`.
    #[getter]
    fn precision(&self) -> String {
        self.doc.precision.to_string()
    }

    /// Seconds the configuration sweep took.
    #[getter]
    fn wall_time_s(&self) -> f64 {
        self.doc.provenance.wall_time_s
    }

    /// Pipeline stage index of each layer, in layer order.
    fn stage_of(&self) -> Vec<usize> {
        self.doc.layers.iter().map(|l| l.stage).collect()
    }

    /// `(dp, tp, fsdp)` strategy of each layer, in layer order.
    fn strategy_of(&self) -> Vec<(u32, u32, bool)> {
        self.doc.layers.iter().map(|l| (l.dp, l.tp, l.fsdp)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(stages={}, micro_batches={}, devices={}, tpi_estimate_s={:.6})",
            self.doc.stage_count, self.doc.micro_batches, self.doc.devices, self.doc.tpi_estimate_s
        )
    }
}

/// Outcome of rechecking a plan: violations, recomputed estimate, and the
/// simulated schedule.
#[pyclass(frozen)]
struct Report {
    outcome: Revalidation,
}

#[pymethods]
impl Report {
    /// True when the plan satisfies every planner constraint.
    #[getter]
    fn valid(&self) -> bool {
        self.outcome.violations.is_empty()
    }

    /// Human-readable description of each violated constraint.
    #[getter]
    fn violations(&self) -> Vec<String> {
        self.outcome.violations.iter().map(|v| v.to_string()).collect()
    }

    /// Iteration time recomputed from the plan's own choices, in seconds.
    #[getter]
    fn estimate_s(&self) -> f64 {
        self.outcome.estimate_s
    }

    /// Simulated iteration time, in seconds.
    #[getter]
    fn makespan_s(&self) -> f64 {
        self.outcome.trace.makespan
    }

    /// Relative estimation error `|makespan - estimate| / makespan`, in
    /// percent.
    #[getter]
    fn ree_percent(&self) -> f64 {
        self.outcome.ree_percent
    }

    /// Whether the model text matches the digest recorded in the plan.
    #[getter]
    fn model_digest_matches(&self) -> bool {
        self.outcome.model_digest_matches
    }

    /// Whether the profile text matches the digest recorded in the plan.
    #[getter]
    fn profile_digest_matches(&self) -> bool {
        self.outcome.profile_digest_matches
    }

    /// The simulated event trace as JSON: every forward/backward compute and
    /// transfer with start/end seconds, plus the makespan.
    fn trace_json(&self) -> String {
        serde_json::to_string_pretty(&self.outcome.trace).expect("trace serializes") + "\n"
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(valid={}, violations={}, estimate_s={:.6}, makespan_s={:.6})",
            if self.outcome.violations.is_empty() { "True" } else { "False" },
            self.outcome.violations.len(),
            self.outcome.estimate_s,
            self.outcome.trace.makespan
        )
    }
}

/// Search every pipeline configuration for the fastest parallel plan.
///
/// `model_json` is the profiled computation graph, `profile_json` the
/// cluster description, `batch` the mini-batch size per iteration.
#[pyfunction]
#[pyo3(signature = (model_json, profile_json, batch, precision = "fp32", time_limit_s = 60.0, gap = 1e-4))]
fn plan(
    model_json: &str,
    profile_json: &str,
    batch: u64,
    precision: &str,
    time_limit_s: f64,
    gap: f64,
) -> PyResult<Plan> {
    if batch == 0 {
        return Err(PyValueError::new_err("batch must be >= 1"));
    }
    if time_limit_s <= 0.0 || time_limit_s.is_nan() {
        return Err(PyValueError::new_err(format!(
            "time limit must be positive, got {time_limit_s}"
        )));
    }
    if gap < 0.0 || !gap.is_finite() {
        return Err(PyValueError::new_err(format!(
            "gap must be a non-negative number, got {gap}"
        )));
    }
    let graph = ComputationGraph::from_json(model_json).map_err(to_py_err)?;
    let profile = load_profile(profile_json).map_err(to_py_err)?;
    let precision: Precision = precision.parse().map_err(to_py_err)?;
    let options = UopOptions {
        budget: SolveBudget {
            time_limit_s,
            gap_tol: gap,
            previous_best: None,
        },
        use_previous_best_cutoff: true,
        parallel: true,
    };
    let result = unified_optimize(&graph, &profile, batch, precision, &options).map_err(to_py_err)?;
    Ok(Plan {
        doc: PlanDocument::from_plan(
            &result.plan,
            &graph,
            model_json,
            profile_json,
            batch,
            profile.n,
            precision,
            result.total_wall_time_s,
        ),
    })
}

/// Recheck `plan` against the model and profile it was built from, then
/// simulate the schedule.
#[pyfunction]
fn validate(plan: &Plan, model_json: &str, profile_json: &str) -> PyResult<Report> {
    let outcome = revalidate(&plan.doc, model_json, profile_json).map_err(to_py_err)?;
    Ok(Report { outcome })
}

/// Simulate a flush pipeline with explicit per-stage timings.
///
/// `fwd` and `bwd` give forward/backward compute seconds per stage; the
/// `*_comm` lists give transfer seconds per stage boundary (one entry fewer).
/// `c` is the micro-batch count. Returns the event trace as JSON.
#[pyfunction]
fn simulate(
    fwd: Vec<f64>,
    bwd: Vec<f64>,
    fwd_comm: Vec<f64>,
    bwd_comm: Vec<f64>,
    c: u32,
) -> PyResult<String> {
    let times = StageTimes {
        fwd,
        bwd,
        fwd_comm,
        bwd_comm,
    };
    let trace = simulate_gpipe(&times, c).map_err(to_py_err)?;
    Ok(serde_json::to_string_pretty(&trace).expect("trace serializes") + "\n")
}

/// The `(stages, micro_batches)` configurations a sweep would try for
/// `devices` devices and mini-batch `batch`, in sweep order.
#[pyfunction]
fn sweep_configurations(devices: u32, batch: u64) -> PyResult<Vec<(u32, u32)>> {
    if devices == 0 || batch == 0 {
        return Err(PyValueError::new_err("devices and batch must be >= 1"));
    }
    Ok(sweep_configs(devices, batch))
}

/// The `(dp, tp, fsdp)` strategies available to a layer when each stage owns
/// `per_stage_devices` devices, in canonical order.
#[pyfunction]
fn strategies(per_stage_devices: u32) -> PyResult<Vec<(u32, u32, bool)>> {
    if per_stage_devices == 0 {
        return Err(PyValueError::new_err("per_stage_devices must be >= 1"));
    }
    Ok(enumerate_strategies(per_stage_devices)
        .strategies
        .iter()
        .map(|s| (s.dp, s.tp, s.fsdp_shard))
        .collect())
}

#[pymodule]
fn uniplan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<Plan>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_configurations, m)?)?;
    m.add_function(wrap_pyfunction!(strategies, m)?)?;
    Ok(())
}
