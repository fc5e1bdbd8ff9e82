//! Cluster profiles and the communication/overlap time primitives.
//!
//! A [`ClusterProfile`] is normally produced by measuring a real cluster and
//! serialized as JSON; [`synth_profile`] generates a synthetic alpha–beta
//! profile (uniform link bandwidth plus a fixed per-message latency) so the
//! planner can be exercised without hardware.
//!
//! Collective times use the standard ring model: an all-reduce of `V` bytes
//! over `g` devices moves `2 (g-1) / g * V` bytes per device and pays
//! `2 (g-1)` message latencies. Ring discounting is applied here at time
//! computation; the bandwidth tables store raw link bandwidth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Description of the training cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    /// Total device count `n`.
    pub n: u32,
    /// Per-device memory limits in bytes (length `n`).
    pub mem_bytes_per_device: Vec<f64>,
    /// Effective all-reduce bandwidth in bytes/second keyed by group size.
    /// Must contain every divisor of `n` that is >= 2, because any such
    /// divisor can appear as a DP or TP group.
    pub allreduce_bw: BTreeMap<u32, f64>,
    /// Point-to-point bandwidth in bytes/second. The `"default"` entry is
    /// required and is what the cost model charges for every stage boundary;
    /// additional entries keyed by boundary index may record measured
    /// per-boundary links for documentation purposes.
    pub p2p_bw: BTreeMap<String, f64>,
    /// Fixed per-message latency in seconds.
    pub latency_s: f64,
    /// Computation–communication overlap coefficient in `[0, 1]`: the
    /// fraction of the overlappable interval that is actually hidden.
    pub ccoc: f64,
}

fn all_divisors(x: u32) -> Vec<u32> {
    (1..=x).filter(|d| x.is_multiple_of(*d)).collect()
}

impl ClusterProfile {
    /// Validate every profile invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let schema = |field: &str, message: String| Error::Schema {
            field: field.to_string(),
            message,
        };
        if self.n < 1 {
            return Err(schema("n", "device count must be >= 1".to_string()));
        }
        if self.mem_bytes_per_device.len() != self.n as usize {
            return Err(schema(
                "mem_bytes_per_device",
                format!(
                    "expected {} entries (one per device), found {}",
                    self.n,
                    self.mem_bytes_per_device.len()
                ),
            ));
        }
        for (i, &m) in self.mem_bytes_per_device.iter().enumerate() {
            if m <= 0.0 || !m.is_finite() {
                return Err(schema(
                    "mem_bytes_per_device",
                    format!("device {i}: memory limit must be positive and finite, got {m}"),
                ));
            }
        }
        for d in all_divisors(self.n) {
            if d >= 2 && !self.allreduce_bw.contains_key(&d) {
                return Err(schema(
                    "allreduce_bw",
                    format!("missing entry for group size {d} (a divisor of n = {})", self.n),
                ));
            }
        }
        for (g, &bw) in &self.allreduce_bw {
            if bw <= 0.0 || !bw.is_finite() {
                return Err(schema(
                    "allreduce_bw",
                    format!("group size {g}: bandwidth must be positive and finite, got {bw}"),
                ));
            }
        }
        if !self.p2p_bw.contains_key("default") {
            return Err(schema("p2p_bw", "missing required \"default\" entry".to_string()));
        }
        for (k, &bw) in &self.p2p_bw {
            if bw <= 0.0 || !bw.is_finite() {
                return Err(schema(
                    "p2p_bw",
                    format!("entry \"{k}\": bandwidth must be positive and finite, got {bw}"),
                ));
            }
        }
        if self.latency_s < 0.0 || !self.latency_s.is_finite() {
            return Err(schema(
                "latency_s",
                format!("latency must be non-negative and finite, got {}", self.latency_s),
            ));
        }
        if !(0.0..=1.0).contains(&self.ccoc) {
            return Err(schema(
                "ccoc",
                format!("ccoc out of range [0, 1]: {}", self.ccoc),
            ));
        }
        Ok(())
    }

    /// The point-to-point bandwidth the cost model charges.
    ///
    /// Panics if the profile was constructed without a `"default"` entry;
    /// [`load_profile`] and [`synth_profile`] guarantee its presence.
    pub fn p2p_default_bw(&self) -> f64 {
        *self
            .p2p_bw
            .get("default")
            .expect("profile invariant: p2p_bw must contain a \"default\" entry")
    }

    /// Serialize back to the JSON document format accepted by
    /// [`load_profile`].
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serialization cannot fail")
    }
}

/// Parse and validate a profile JSON document.
pub fn load_profile(text: &str) -> Result<ClusterProfile> {
    let profile: ClusterProfile = serde_json::from_str(text)?;
    profile.validate()?;
    Ok(profile)
}

/// Build a synthetic uniform profile: every all-reduce group size (all
/// divisors of `n`) and the default P2P link share one bandwidth, and every
/// device has the same memory limit.
pub fn synth_profile(
    n: u32,
    link_bw: f64,
    latency_s: f64,
    mem_bytes: f64,
    ccoc: f64,
) -> ClusterProfile {
    assert!(n >= 1, "device count must be >= 1");
    assert!(link_bw > 0.0, "link bandwidth must be positive");
    let allreduce_bw = all_divisors(n).into_iter().map(|g| (g, link_bw)).collect();
    let profile = ClusterProfile {
        n,
        mem_bytes_per_device: vec![mem_bytes; n as usize],
        allreduce_bw,
        p2p_bw: BTreeMap::from([("default".to_string(), link_bw)]),
        latency_s,
        ccoc,
    };
    debug_assert!(profile.validate().is_ok());
    profile
}

/// Ring all-reduce time for `volume_bytes` over a group of `group` devices.
///
/// `2 (g-1) / g * volume / bw[g] + 2 (g-1) * latency`; zero for singleton
/// groups (no communication happens).
pub fn allreduce_time(volume_bytes: f64, group: u32, profile: &ClusterProfile) -> Result<f64> {
    debug_assert!(volume_bytes >= 0.0);
    if group <= 1 {
        return Ok(0.0);
    }
    let bw = *profile.allreduce_bw.get(&group).ok_or_else(|| {
        Error::InvalidInput(format!(
            "no all-reduce bandwidth entry for group size {group}"
        ))
    })?;
    let g = group as f64;
    Ok(2.0 * (g - 1.0) / g * volume_bytes / bw + 2.0 * (g - 1.0) * profile.latency_s)
}

/// Ring all-gather (or reduce-scatter) time: one direction of the ring, i.e.
/// half the all-reduce cost. Used for the FSDP parameter/gradient
/// collectives, which decompose into all-gathers and reduce-scatters.
pub fn allgather_time(volume_bytes: f64, group: u32, profile: &ClusterProfile) -> Result<f64> {
    debug_assert!(volume_bytes >= 0.0);
    if group <= 1 {
        return Ok(0.0);
    }
    let bw = *profile.allreduce_bw.get(&group).ok_or_else(|| {
        Error::InvalidInput(format!(
            "no all-reduce bandwidth entry for group size {group}"
        ))
    })?;
    let g = group as f64;
    Ok((g - 1.0) / g * volume_bytes / bw + (g - 1.0) * profile.latency_s)
}

/// Point-to-point transfer time over the default link:
/// `volume / p2p_bw + latency`.
pub fn p2p_time(volume_bytes: f64, profile: &ClusterProfile) -> f64 {
    debug_assert!(volume_bytes >= 0.0);
    volume_bytes / profile.p2p_default_bw() + profile.latency_s
}

/// Combine a compute interval and a communication interval that may overlap.
///
/// The overlappable interval is `min(compute, comm)`; `ccoc` scales how much
/// of it is hidden. `ccoc = 0` serializes (`compute + comm`), `ccoc = 1`
/// fully overlaps (`max(compute, comm)`).
pub fn overlap(compute_s: f64, comm_s: f64, ccoc: f64) -> f64 {
    debug_assert!(compute_s >= 0.0 && comm_s >= 0.0);
    debug_assert!((0.0..=1.0).contains(&ccoc));
    compute_s + comm_s - ccoc * compute_s.min(comm_s)
}
