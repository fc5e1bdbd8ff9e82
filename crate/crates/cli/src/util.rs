//! Exit codes, error mapping, and small formatting helpers shared by the
//! subcommands.

use std::path::{Path, PathBuf};

use uniplan_core::{Error, Result};

/// Success.
pub const EXIT_OK: u8 = 0;
/// Bad arguments or malformed/inconsistent input files.
pub const EXIT_INPUT: u8 = 1;
/// No feasible plan exists for the given model, cluster, and batch.
pub const EXIT_INFEASIBLE: u8 = 2;
/// The plan failed re-validation.
pub const EXIT_VIOLATIONS: u8 = 3;
/// A file could not be read or written.
pub const EXIT_IO: u8 = 4;

/// Map a library error to the process exit code.
pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_INPUT,
    }
}

/// Read a text file, attaching the path to any I/O error.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| annotate(path, e))
}

/// Write a text file, attaching the path to any I/O error.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| annotate(path, e))
}

/// Write raw bytes, attaching the path to any I/O error.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| annotate(path, e))
}

fn annotate(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Default location of the event trace belonging to a plan document:
/// `plan.json` -> `plan.trace.json`.
pub fn default_trace_path(plan: &Path) -> PathBuf {
    plan.with_extension("trace.json")
}

/// Plain-ASCII strategy tag for tables, e.g. `dp2tp1` or `dp4tp1+fsdp`.
pub fn strategy_tag(dp: u32, tp: u32, fsdp: bool) -> String {
    if fsdp {
        format!("dp{dp}tp{tp}+fsdp")
    } else {
        format!("dp{dp}tp{tp}")
    }
}

/// Milliseconds with three decimals.
pub fn fmt_ms(seconds: f64) -> String {
    format!("{:.3}", seconds * 1e3)
}

/// GiB with two decimals.
pub fn fmt_gib(bytes: f64) -> String {
    format!("{:.2}", bytes / (1024.0 * 1024.0 * 1024.0))
}

/// Compact layer list: consecutive runs become ranges (`0-3`, `5`, `7-8`).
pub fn layer_list(layers: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < layers.len() {
        let start = layers[i];
        let mut end = start;
        while i + 1 < layers.len() && layers[i + 1] == end + 1 {
            i += 1;
            end = layers[i];
        }
        if start == end {
            parts.push(format!("{start}"));
        } else {
            parts.push(format!("{start}-{end}"));
        }
        i += 1;
    }
    if parts.is_empty() {
        "-".to_string()
    } else {
        parts.join(",")
    }
}
