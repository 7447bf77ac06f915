//! Field measurement logs: ingestion, per-height summaries and gating.
//!
//! Logs are CSV with the exact header `height_m,rsrp_dbm,sinr_db,ul_rate_bps,latency_ms`.
//! Every column except height may be blank. Latency is read as end-to-end
//! round-trip time; logs carry no network-only latency.

mod summary;
mod synth;

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use summary::{
    nearest_rank, summarize, trial_gate, Band, BinStats, BinSummary, HeightBin, MetricBands, MetricSummary,
    TrialSummary,
};
pub use synth::{synthesize, SynthSpec};

pub const TRIAL_HEADER: [&str; 5] = ["height_m", "rsrp_dbm", "sinr_db", "ul_rate_bps", "latency_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub height_m: f64,
    pub rsrp_dbm: Option<f64>,
    pub sinr_db: Option<f64>,
    pub ul_rate_bps: Option<f64>,
    pub latency_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RsrpDbm,
    SinrDb,
    UlRateBps,
    LatencyMs,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::RsrpDbm, Metric::SinrDb, Metric::UlRateBps, Metric::LatencyMs];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::RsrpDbm => "rsrp_dbm",
            Metric::SinrDb => "sinr_db",
            Metric::UlRateBps => "ul_rate_bps",
            Metric::LatencyMs => "latency_ms",
        }
    }
}

impl TrialRecord {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::RsrpDbm => self.rsrp_dbm,
            Metric::SinrDb => self.sinr_db,
            Metric::UlRateBps => self.ul_rate_bps,
            Metric::LatencyMs => self.latency_ms,
        }
    }
}

pub fn ingest_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    read_csv(File::open(path)?, path)
}

/// Parse a trial log. `origin` is only used in error messages.
pub fn read_csv<R: Read>(r: R, origin: &Path) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRIAL_HEADER) {
        return Err(Error::Header {
            path: origin.to_path_buf(),
            reason: format!("expected `{}`, got `{}`", TRIAL_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |col: usize, reason: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            column: TRIAL_HEADER[col].to_string(),
            reason,
        };
        let cell = |col: usize| -> Result<Option<f64>> {
            let raw = rec[col].trim();
            if raw.is_empty() {
                return Ok(None);
            }
            let v: f64 = raw.parse().map_err(|e| err(col, format!("`{raw}`: {e}")))?;
            if !v.is_finite() {
                return Err(err(col, "not finite".into()));
            }
            Ok(Some(v))
        };
        let height_m = match cell(0)? {
            Some(h) if h > 0.0 => h,
            Some(h) => return Err(err(0, format!("must be > 0, got {h}"))),
            None => return Err(err(0, "missing".into())),
        };
        let r = TrialRecord { height_m, rsrp_dbm: cell(1)?, sinr_db: cell(2)?, ul_rate_bps: cell(3)?, latency_ms: cell(4)? };
        if r.ul_rate_bps.is_some_and(|v| v < 0.0) {
            return Err(err(3, "must be >= 0".into()));
        }
        if r.latency_ms.is_some_and(|v| v < 0.0) {
            return Err(err(4, "must be >= 0".into()));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn write_csv<W: Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRIAL_HEADER)?;
    let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in records {
        out.write_record([r.height_m.to_string(), fmt(r.rsrp_dbm), fmt(r.sinr_db), fmt(r.ul_rate_bps), fmt(r.latency_ms)])?;
    }
    out.flush()?;
    Ok(())
}
