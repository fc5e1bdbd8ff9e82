//! `uniplan render`: ASCII stage map of a plan document plus an optional SVG
//! Gantt chart of its simulated schedule. Output is a pure function of its
//! inputs: identical plan + trace bytes render to identical bytes.

use std::fmt::Write as _;

use uniplan_core::plan::PlanDocument;
use uniplan_core::sim::{EventTrace, Phase, ResourceKind};
use uniplan_core::{Error, Result};

use crate::util;
use crate::RenderArgs;

pub fn run(args: &RenderArgs) -> Result<u8> {
    let doc = PlanDocument::from_json(&util::read_text(&args.plan)?)?;
    print!("{}", stage_map(&doc));

    if let Some(gantt) = &args.gantt {
        let trace_path = args
            .trace
            .clone()
            .unwrap_or_else(|| util::default_trace_path(&args.plan));
        if !trace_path.exists() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!(
                    "no event trace at {}; run `uniplan validate` first to produce it",
                    trace_path.display()
                ),
            )));
        }
        let trace: EventTrace = serde_json::from_str(&util::read_text(&trace_path)?)?;
        util::write_text(gantt, &render_svg(&trace))?;
        println!("gantt chart written to {}", gantt.display());
    }
    Ok(util::EXIT_OK)
}

/// One line per stage: a layer-occupancy grid plus devices and strategies.
fn stage_map(doc: &PlanDocument) -> String {
    let v = doc.layers.len();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "plan: {} stage(s) x {} device(s), {} micro-batch(es) of {}, precision {}",
        doc.stage_count, doc.per_stage_devices, doc.micro_batches, doc.micro_batch_size, doc.precision
    );
    let _ = writeln!(
        out,
        "estimated iteration time: {} ms",
        util::fmt_ms(doc.tpi_estimate_s)
    );
    let _ = writeln!(out, "{:>8}   layers 0..{}", "", v.saturating_sub(1));
    for stage in &doc.stages {
        let mut cells = vec!['.'; v];
        for &u in &stage.layers {
            cells[u] = '#';
        }
        let grid: String = cells.into_iter().collect();
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
            tags[0].clone()
        } else {
            tags.join(",")
        };
        let _ = writeln!(
            out,
            "stage {:>2}   {}   devices {}   {}",
            stage.index,
            grid,
            util::layer_list(&stage.devices.iter().map(|&d| d as usize).collect::<Vec<_>>()),
            strategies
        );
    }
    out
}

const CHART_LEFT: f64 = 90.0;
const CHART_WIDTH: f64 = 760.0;
const ROW_HEIGHT: f64 = 26.0;
const BAR_HEIGHT: f64 = 18.0;
const CHART_TOP: f64 = 34.0;

fn phase_class(phase: Phase) -> &'static str {
    match phase {
        Phase::Forward => "forward",
        Phase::ForwardComm => "forward-comm",
        Phase::Backward => "backward",
        Phase::BackwardComm => "backward-comm",
    }
}

fn phase_color(phase: Phase) -> &'static str {
    match phase {
        Phase::Forward => "#4e79a7",
        Phase::ForwardComm => "#a0c0de",
        Phase::Backward => "#e15759",
        Phase::BackwardComm => "#f1a9aa",
    }
}

/// Deterministic SVG Gantt chart: one row per pipeline resource (stages
/// interleaved with boundary links), one rectangle per simulated event.
fn render_svg(trace: &EventTrace) -> String {
    let rows = 2 * trace.deg - 1;
    let width = CHART_LEFT + CHART_WIDTH + 20.0;
    let height = CHART_TOP + rows as f64 * ROW_HEIGHT + 26.0;
    let scale = CHART_WIDTH / trace.makespan.max(1e-12);

    let mut row_bars: Vec<String> = vec![String::new(); rows];
    for e in &trace.events {
        if e.end <= e.start {
            continue; // zero-duration events carry no ink
        }
        let row = match e.resource {
            ResourceKind::Stage => 2 * e.index,
            ResourceKind::Boundary => 2 * e.index + 1,
        };
        let x = CHART_LEFT + e.start * scale;
        let w = (e.end - e.start) * scale;
        let y = CHART_TOP + row as f64 * ROW_HEIGHT + (ROW_HEIGHT - BAR_HEIGHT) / 2.0;
        let _ = writeln!(
            row_bars[row],
            "    <rect class=\"{}\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" \
             height=\"{BAR_HEIGHT:.0}\" fill=\"{}\"><title>m{} {} [{:.3}, {:.3}] ms</title></rect>",
            phase_class(e.phase),
            phase_color(e.phase),
            e.micro + 1,
            phase_class(e.phase),
            e.start * 1e3,
            e.end * 1e3,
        );
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.0} {height:.0}\" \
         width=\"{width:.0}\" height=\"{height:.0}\">"
    );
    let _ = writeln!(
        svg,
        "  <style>text {{ font-family: monospace; font-size: 11px; fill: #222; }}</style>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{CHART_LEFT:.0}\" y=\"18\">pipeline schedule: {} stage(s), {} \
         micro-batch(es), makespan {:.3} ms</text>",
        trace.deg,
        trace.c,
        trace.makespan * 1e3
    );
    for (row, bars) in row_bars.iter().enumerate() {
        let label = if row % 2 == 0 {
            format!("stage {}", row / 2)
        } else {
            format!("link {}", (row - 1) / 2)
        };
        let y_text = CHART_TOP + row as f64 * ROW_HEIGHT + ROW_HEIGHT / 2.0 + 4.0;
        let _ = writeln!(svg, "  <g class=\"resource-row\" data-resource=\"{label}\">");
        let _ = writeln!(svg, "    <text x=\"6\" y=\"{y_text:.2}\">{label}</text>");
        svg.push_str(bars);
        let _ = writeln!(svg, "  </g>");
    }
    let axis_y = CHART_TOP + rows as f64 * ROW_HEIGHT + 6.0;
    let _ = writeln!(
        svg,
        "  <line x1=\"{CHART_LEFT:.0}\" y1=\"{axis_y:.2}\" x2=\"{:.2}\" y2=\"{axis_y:.2}\" \
         stroke=\"#888\"/>",
        CHART_LEFT + CHART_WIDTH
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{CHART_LEFT:.0}\" y=\"{:.2}\">0</text>",
        axis_y + 14.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.3} ms</text>",
        CHART_LEFT + CHART_WIDTH,
        axis_y + 14.0,
        trace.makespan * 1e3
    );
    svg.push_str("</svg>\n");
    svg
}
