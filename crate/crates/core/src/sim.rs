//! Event-driven simulation of a synchronous pipeline schedule, an analytic
//! iteration-time estimate, and the error metric relating the two.
//!
//! The simulated schedule is the flush-style pipeline: each micro-batch
//! traverses stage 0, boundary 0, stage 1, … to the last stage, then turns
//! around and traverses the same resources in reverse for the backward pass.
//! Every resource (stage or boundary link) processes its operations in a
//! fixed order — all `c` forward operations by micro-batch index, then all
//! `c` backward operations — and never runs two operations at once. An
//! operation starts as soon as its resource is free and its predecessor
//! operation for the same micro-batch has finished; the pipeline flush
//! (forward work draining before backward work on each resource) emerges
//! from that discipline rather than from a global barrier.
//!
//! The analytic estimate for one training iteration is
//! `sum(p) + sum(o) + (c - 1) * max(p ∪ o)`: every stage and boundary is
//! traversed once by the first micro-batch, and the slowest resource paces
//! the remaining `c - 1`. The estimate never exceeds the simulated makespan,
//! and the two agree exactly when every resource splits its forward and
//! backward work in the same ratio — which holds by construction for times
//! derived with [`stage_times_from`].

use serde::{Deserialize, Serialize};

use crate::cost::BP_FP_RATIO;
use crate::{Error, Result};

/// Per-micro-batch phase durations for each pipeline resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    /// Forward compute seconds per stage.
    pub fwd: Vec<f64>,
    /// Backward compute seconds per stage (same length as `fwd`).
    pub bwd: Vec<f64>,
    /// Forward transfer seconds per boundary (one fewer than stages).
    pub fwd_comm: Vec<f64>,
    /// Backward transfer seconds per boundary.
    pub bwd_comm: Vec<f64>,
}

impl StageTimes {
    pub fn deg(&self) -> usize {
        self.fwd.len()
    }

    pub fn validate(&self) -> Result<()> {
        let deg = self.fwd.len();
        if deg == 0 {
            return Err(Error::InvalidInput(
                "stage times need at least one stage".to_string(),
            ));
        }
        if self.bwd.len() != deg {
            return Err(Error::InvalidInput(format!(
                "bwd covers {} stages, fwd covers {deg}",
                self.bwd.len()
            )));
        }
        if self.fwd_comm.len() != deg - 1 || self.bwd_comm.len() != deg - 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} boundary entries, got {}/{}",
                deg - 1,
                self.fwd_comm.len(),
                self.bwd_comm.len()
            )));
        }
        let all = self
            .fwd
            .iter()
            .chain(&self.bwd)
            .chain(&self.fwd_comm)
            .chain(&self.bwd_comm);
        for &v in all {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "phase durations must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Split combined per-stage costs `p` and per-boundary costs `o` into
/// forward and backward phases using the backward/forward compute ratio:
/// the forward share is `1 / (1 + ratio)` of the total, the backward share
/// the rest, so the phases always sum back to the combined cost.
pub fn stage_times_from(stage_costs: &[f64], boundary_costs: &[f64]) -> StageTimes {
    let split = |total: f64| {
        let fwd = total / (1.0 + BP_FP_RATIO);
        (fwd, total - fwd)
    };
    let (fwd, bwd) = stage_costs.iter().map(|&p| split(p)).unzip();
    let (fwd_comm, bwd_comm) = boundary_costs.iter().map(|&o| split(o)).unzip();
    StageTimes {
        fwd,
        bwd,
        fwd_comm,
        bwd_comm,
    }
}

/// What a simulated event ran on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceKind {
    Stage,
    Boundary,
}

/// Which phase of the pipeline an event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Forward,
    ForwardComm,
    Backward,
    BackwardComm,
}

/// One simulated operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub resource: ResourceKind,
    pub index: usize,
    /// Micro-batch index, 0-based.
    pub micro: u32,
    pub phase: Phase,
    pub start: f64,
    pub end: f64,
}

/// Full simulation output: every operation with start/end times, plus the
/// makespan (time for the iteration to drain completely).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTrace {
    pub deg: usize,
    pub c: u32,
    pub makespan: f64,
    pub events: Vec<Event>,
}

/// Simulate one training iteration of the flush pipeline with `c`
/// micro-batches.
pub fn simulate_gpipe(times: &StageTimes, c: u32) -> Result<EventTrace> {
    times.validate()?;
    if c == 0 {
        return Err(Error::InvalidInput(
            "micro-batch count must be >= 1".to_string(),
        ));
    }
    let deg = times.deg();
    // Resources along the forward route: stage 0, boundary 0, stage 1, ...
    // Index r: even -> stage r/2, odd -> boundary (r-1)/2.
    let num_resources = 2 * deg - 1;
    let mut resource_avail = vec![0.0f64; num_resources];
    let mut pred_end = vec![0.0f64; c as usize];
    let mut events = Vec::with_capacity(2 * num_resources * c as usize);
    let mut makespan = 0.0f64;

    let run = |route: &[usize],
                   duration_of: &dyn Fn(usize) -> (f64, Phase),
                   resource_avail: &mut Vec<f64>,
                   pred_end: &mut Vec<f64>,
                   events: &mut Vec<Event>| {
        for &r in route {
            let (duration, phase) = duration_of(r);
            let (resource, index) = if r % 2 == 0 {
                (ResourceKind::Stage, r / 2)
            } else {
                (ResourceKind::Boundary, (r - 1) / 2)
            };
            for m in 0..c as usize {
                let start = resource_avail[r].max(pred_end[m]);
                let end = start + duration;
                resource_avail[r] = end;
                pred_end[m] = end;
                events.push(Event {
                    resource,
                    index,
                    micro: m as u32,
                    phase,
                    start,
                    end,
                });
            }
        }
    };

    let forward_route: Vec<usize> = (0..num_resources).collect();
    run(
        &forward_route,
        &|r| {
            if r % 2 == 0 {
                (times.fwd[r / 2], Phase::Forward)
            } else {
                (times.fwd_comm[(r - 1) / 2], Phase::ForwardComm)
            }
        },
        &mut resource_avail,
        &mut pred_end,
        &mut events,
    );
    let backward_route: Vec<usize> = (0..num_resources).rev().collect();
    run(
        &backward_route,
        &|r| {
            if r % 2 == 0 {
                (times.bwd[r / 2], Phase::Backward)
            } else {
                (times.bwd_comm[(r - 1) / 2], Phase::BackwardComm)
            }
        },
        &mut resource_avail,
        &mut pred_end,
        &mut events,
    );

    for e in &events {
        makespan = makespan.max(e.end);
    }
    Ok(EventTrace {
        deg,
        c,
        makespan,
        events,
    })
}

/// Analytic estimate of the per-iteration time from combined stage costs
/// `p`, boundary costs `o`, and the micro-batch count `c`.
pub fn estimate_tpi(stage_costs: &[f64], boundary_costs: &[f64], c: u32) -> f64 {
    assert!(
        !stage_costs.is_empty() && c >= 1,
        "estimate needs at least one stage and c >= 1"
    );
    let sum: f64 = stage_costs.iter().sum::<f64>() + boundary_costs.iter().sum::<f64>();
    let max = stage_costs
        .iter()
        .chain(boundary_costs.iter())
        .fold(0.0f64, |acc, &v| acc.max(v));
    sum + (c as f64 - 1.0) * max
}

/// Relative estimation error in percent: `|measured - estimated| / measured
/// * 100`. `measured` must be positive.
pub fn relative_error(measured: f64, estimated: f64) -> f64 {
    assert!(measured > 0.0, "measured time must be positive");
    (measured - estimated).abs() / measured * 100.0
}
