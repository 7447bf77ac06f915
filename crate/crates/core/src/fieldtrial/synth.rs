//! Synthetic trial logs shaped like a low-altitude commercial-network drive test.
//!
//! Per record: RSRP uniform in [-90, -75] dBm, SINR in [-10, 5] dB, uplink
//! rate in [4, 10] Mbps with an occasional burst up to 12 Mbps, and latency in
//! [200, 300] ms up to 100 m or [400, 500] ms above. A small share of values is
//! pushed outside these ranges. This is fabricated data for tests and demos,
//! not a measurement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::TrialRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub heights_m: Vec<f64>,
    pub per_height: usize,
    /// Probability that a single value is drawn outside its nominal range.
    pub outlier_fraction: f64,
    /// Probability that an uplink sample lands in the 10-12 Mbps burst range.
    pub burst_fraction: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { heights_m: vec![50.0, 100.0, 300.0], per_height: 200, outlier_fraction: 0.02, burst_fraction: 0.03 }
    }
}

/// Draw from `[lo, hi]`, or with probability `outlier` from a strip of the
/// same width just below or above it.
fn value<R: Rng>(rng: &mut R, lo: f64, hi: f64, outlier: f64) -> f64 {
    let w = hi - lo;
    if rng.random_bool(outlier) {
        if rng.random_bool(0.5) {
            rng.random_range(lo - w * 0.25..lo)
        } else {
            rng.random_range(hi..hi + w * 0.25)
        }
    } else {
        rng.random_range(lo..=hi)
    }
}

pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<Vec<TrialRecord>> {
    if spec.heights_m.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::invalid("heights_m", "heights must be positive"));
    }
    for (name, p) in [("outlier_fraction", spec.outlier_fraction), ("burst_fraction", spec.burst_fraction)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(name, format!("must be in [0, 1], got {p}")));
        }
    }
    let mut out = Vec::with_capacity(spec.heights_m.len() * spec.per_height);
    for (i, &h) in spec.heights_m.iter().enumerate() {
        let mut rng = seed::rng(seed, "synth-trial", &[i as u64]);
        let latency = if h <= 100.0 { (200.0, 300.0) } else { (400.0, 500.0) };
        for _ in 0..spec.per_height {
            let rsrp = value(&mut rng, -90.0, -75.0, spec.outlier_fraction);
            let sinr = value(&mut rng, -10.0, 5.0, spec.outlier_fraction);
            let ul = if rng.random_bool(spec.burst_fraction) {
                rng.random_range(10e6..=12e6)
            } else {
                value(&mut rng, 4e6, 10e6, spec.outlier_fraction)
            };
            let lat = value(&mut rng, latency.0, latency.1, spec.outlier_fraction);
            out.push(TrialRecord {
                height_m: h,
                rsrp_dbm: Some(rsrp),
                sinr_db: Some(sinr),
                ul_rate_bps: Some(ul),
                latency_ms: Some(lat),
            });
        }
    }
    Ok(out)
}
