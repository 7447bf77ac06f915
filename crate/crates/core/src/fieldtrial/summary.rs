use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::requirements::{gate, ComplianceReport, Kpi, KpiReport, KpiSource, RequirementProfile};

use super::{Metric, TrialRecord};

/// Height interval `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightBin {
    pub lo_m: f64,
    pub hi_m: f64,
}

impl HeightBin {
    pub fn new(lo_m: f64, hi_m: f64) -> Self {
        Self { lo_m, hi_m }
    }

    pub fn contains(&self, h: f64) -> bool {
        h > self.lo_m && h <= self.hi_m
    }

    /// Bins `(0, h1], (h1, h2], ..` from ascending upper edges.
    pub fn from_edges(upper: &[f64]) -> Vec<HeightBin> {
        let mut lo = 0.0;
        upper
            .iter()
            .map(|&hi| {
                let b = HeightBin::new(lo, hi);
                lo = hi;
                b
            })
            .collect()
    }
}

/// Closed value interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricBands {
    pub rsrp_dbm: Option<Band>,
    pub sinr_db: Option<Band>,
    pub ul_rate_bps: Option<Band>,
    pub latency_ms: Option<Band>,
}

impl MetricBands {
    pub fn get(&self, metric: Metric) -> Option<Band> {
        match metric {
            Metric::RsrpDbm => self.rsrp_dbm,
            Metric::SinrDb => self.sinr_db,
            Metric::UlRateBps => self.ul_rate_bps,
            Metric::LatencyMs => self.latency_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    /// Records with this metric present.
    pub present: usize,
    pub p25: Option<f64>,
    pub median: Option<f64>,
    pub p75: Option<f64>,
    pub band: Option<Band>,
    pub band_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub count: usize,
    pub max_height_m: Option<f64>,
    pub metrics: Vec<MetricSummary>,
}

impl BinStats {
    pub fn metric(&self, metric: Metric) -> &MetricSummary {
        self.metrics.iter().find(|m| m.metric == metric).expect("every metric is summarized")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub bin: HeightBin,
    #[serde(flatten)]
    pub stats: BinStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub bins: Vec<BinSummary>,
    /// Records whose height fell in no bin.
    pub unbinned: BinStats,
}

/// Nearest-rank percentile of sorted data: element `ceil(p * n / 100)` (1-based).
pub fn nearest_rank(sorted: &[f64], percent: u32) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = (percent as usize * n).div_ceil(100).max(1);
    Some(sorted[rank.min(n) - 1])
}

fn stats(records: &[&TrialRecord], bands: &MetricBands) -> BinStats {
    let metrics = Metric::ALL
        .iter()
        .map(|&metric| {
            let mut values: Vec<f64> = records.iter().filter_map(|r| r.get(metric)).collect();
            values.sort_by(f64::total_cmp);
            let band = bands.get(metric);
            let band_fraction = band.filter(|_| !values.is_empty()).map(|b| {
                values.iter().filter(|&&v| b.contains(v)).count() as f64 / values.len() as f64
            });
            MetricSummary {
                metric,
                present: values.len(),
                p25: nearest_rank(&values, 25),
                median: nearest_rank(&values, 50),
                p75: nearest_rank(&values, 75),
                band,
                band_fraction,
            }
        })
        .collect();
    BinStats {
        count: records.len(),
        max_height_m: records.iter().map(|r| r.height_m).max_by(f64::total_cmp),
        metrics,
    }
}

pub fn summarize(records: &[TrialRecord], bins: &[HeightBin], bands: &MetricBands) -> Result<TrialSummary> {
    for (i, b) in bins.iter().enumerate() {
        if !(b.lo_m >= 0.0 && b.lo_m < b.hi_m && b.hi_m.is_finite()) {
            return Err(Error::invalid("bins", format!("bin {i} ({}, {}] is empty or invalid", b.lo_m, b.hi_m)));
        }
        for c in &bins[..i] {
            if b.lo_m < c.hi_m && c.lo_m < b.hi_m {
                return Err(Error::invalid(
                    "bins",
                    format!("({}, {}] overlaps ({}, {}]", c.lo_m, c.hi_m, b.lo_m, b.hi_m),
                ));
            }
        }
    }
    for (name, band) in Metric::ALL.iter().map(|&m| (m.as_str(), bands.get(m))) {
        if let Some(b) = band {
            if !(b.lo <= b.hi) {
                return Err(Error::invalid("bands", format!("{name}: lower edge {} above upper {}", b.lo, b.hi)));
            }
        }
    }

    let mut grouped: Vec<Vec<&TrialRecord>> = vec![Vec::new(); bins.len()];
    let mut unbinned = Vec::new();
    for r in records {
        match bins.iter().position(|b| b.contains(r.height_m)) {
            Some(i) => grouped[i].push(r),
            None => unbinned.push(r),
        }
    }
    Ok(TrialSummary {
        bins: bins.iter().zip(&grouped).map(|(&bin, rs)| BinSummary { bin, stats: stats(rs, bands) }).collect(),
        unbinned: stats(&unbinned, bands),
    })
}

impl TrialSummary {
    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.stats.count).sum::<usize>() + self.unbinned.count
    }

    pub fn bin(&self, bin: HeightBin) -> Option<&BinSummary> {
        self.bins.iter().find(|b| b.bin == bin)
    }

    /// One row per bin and metric; the unbinned bucket has blank edges.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "bin_lo_m",
            "bin_hi_m",
            "metric",
            "count",
            "present",
            "p25",
            "median",
            "p75",
            "band_lo",
            "band_hi",
            "band_fraction",
        ])?;
        let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let rows = self
            .bins
            .iter()
            .map(|b| (Some(b.bin), &b.stats))
            .chain(std::iter::once((None, &self.unbinned)));
        for (bin, stats) in rows {
            for m in &stats.metrics {
                out.write_record([
                    fmt(bin.map(|b| b.lo_m)),
                    fmt(bin.map(|b| b.hi_m)),
                    m.metric.as_str().to_string(),
                    stats.count.to_string(),
                    m.present.to_string(),
                    fmt(m.p25),
                    fmt(m.median),
                    fmt(m.p75),
                    fmt(m.band.map(|b| b.lo)),
                    fmt(m.band.map(|b| b.hi)),
                    fmt(m.band_fraction),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Gate one bin's medians against a profile. The highest logged height in
/// the bin stands in for the reliable altitude.
pub fn trial_gate(summary: &TrialSummary, profile: &RequirementProfile, bin: HeightBin) -> Result<ComplianceReport> {
    let Some(b) = summary.bin(bin) else {
        let known: Vec<String> = summary.bins.iter().map(|b| format!("({}, {}]", b.bin.lo_m, b.bin.hi_m)).collect();
        return Err(Error::invalid("bin", format!("({}, {}] not in summary; have {}", bin.lo_m, bin.hi_m, known.join(", "))));
    };
    let field = |v: Option<f64>| v.map(|x| Kpi::new(x, KpiSource::FieldLog));
    let kpis = KpiReport {
        uplink_rate_bps: field(b.stats.metric(Metric::UlRateBps).median),
        e2e_latency_ms: field(b.stats.metric(Metric::LatencyMs).median),
        max_reliable_height_m: field(b.stats.max_height_m),
        ..Default::default()
    };
    Ok(gate(&kpis, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::requirements::{lookup_requirements, Dimension, Status, Verdict};
    use proptest::prelude::*;

    fn rec(h: f64, lat: Option<f64>) -> TrialRecord {
        TrialRecord { height_m: h, rsrp_dbm: None, sinr_db: None, ul_rate_bps: None, latency_ms: lat }
    }

    #[test]
    fn nearest_rank_by_hand() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(nearest_rank(&v, 25), Some(2.0));
        assert_eq!(nearest_rank(&v, 50), Some(3.0));
        assert_eq!(nearest_rank(&v, 75), Some(4.0));
        assert_eq!(nearest_rank(&v, 0), Some(1.0));
        assert_eq!(nearest_rank(&v, 100), Some(5.0));
        assert_eq!(nearest_rank(&[], 50), None);
        assert_eq!(nearest_rank(&[7.0, 8.0], 50), Some(7.0));
    }

    #[test]
    fn constant_latency_bin() {
        let recs: Vec<_> = (0..10).map(|i| rec(10.0 + i as f64, Some(250.0))).collect();
        let bands = MetricBands { latency_ms: Some(Band::new(200.0, 300.0)), ..Default::default() };
        let s = summarize(&recs, &[HeightBin::new(0.0, 100.0)], &bands).unwrap();
        let lat = s.bins[0].stats.metric(Metric::LatencyMs);
        assert_eq!((lat.median, lat.band_fraction), (Some(250.0), Some(1.0)));
        assert_eq!(s.bins[0].stats.metric(Metric::RsrpDbm).present, 0);
        assert_eq!(s.bins[0].stats.metric(Metric::RsrpDbm).median, None);
    }

    #[test]
    fn unbinned_records_are_kept() {
        let recs = vec![rec(50.0, Some(1.0)), rec(150.0, Some(2.0)), rec(400.0, None)];
        let s = summarize(&recs, &HeightBin::from_edges(&[100.0]), &MetricBands::default()).unwrap();
        assert_eq!((s.bins[0].stats.count, s.unbinned.count, s.total_count()), (1, 2, 3));
        assert_eq!(s.unbinned.metric(Metric::LatencyMs).present, 1);
    }

    #[test]
    fn bin_edges_are_half_open() {
        let bins = HeightBin::from_edges(&[50.0, 100.0]);
        let s = summarize(&[rec(50.0, None), rec(100.0, None)], &bins, &MetricBands::default()).unwrap();
        assert_eq!((s.bins[0].stats.count, s.bins[1].stats.count), (1, 1));
    }

    #[test]
    fn invalid_bins_and_bands() {
        let overlapping = [HeightBin::new(0.0, 100.0), HeightBin::new(50.0, 150.0)];
        assert!(summarize(&[], &overlapping, &MetricBands::default()).is_err());
        assert!(summarize(&[], &[HeightBin::new(10.0, 10.0)], &MetricBands::default()).is_err());
        let bands = MetricBands { sinr_db: Some(Band::new(5.0, -5.0)), ..Default::default() };
        assert!(summarize(&[], &[HeightBin::new(0.0, 1.0)], &bands).is_err());
    }

    #[test]
    fn gate_uses_bin_medians() {
        let recs: Vec<_> = [240.0, 250.0, 260.0]
            .iter()
            .map(|&l| TrialRecord { ul_rate_bps: Some(5e6), ..rec(100.0, Some(l)) })
            .collect();
        let bin = HeightBin::new(0.0, 100.0);
        let s = summarize(&recs, &[bin], &MetricBands::default()).unwrap();
        let r = trial_gate(&s, &lookup_requirements("remote_real_time_control").unwrap(), bin).unwrap();
        assert_eq!(r.status(Dimension::E2eLatency), Some(Status::Fail));
        let obs = r.dimensions.iter().find(|d| d.dimension == Dimension::E2eLatency).unwrap().observed;
        assert_eq!(obs, Some(250.0));
        let r = trial_gate(&s, &lookup_requirements("1080p_transmission").unwrap(), bin).unwrap();
        assert_eq!(r.status(Dimension::UplinkRate), Some(Status::Pass));
        assert_eq!(r.status(Dimension::NetworkLatency), Some(Status::Unknown));
        assert!(trial_gate(&s, &lookup_requirements("logistics").unwrap(), HeightBin::new(5.0, 6.0)).is_err());
    }

    #[test]
    fn empty_bin_gates_unknown() {
        let bin = HeightBin::new(0.0, 100.0);
        let s = summarize(&[], &[bin], &MetricBands::default()).unwrap();
        let r = trial_gate(&s, &lookup_requirements("logistics").unwrap(), bin).unwrap();
        assert!(r.dimensions.iter().all(|d| d.status == Status::Unknown));
        assert_eq!(r.verdict, Verdict::PassWithGaps);
    }

    #[test]
    fn csv_has_row_per_bin_and_metric() {
        let s = summarize(&[rec(50.0, Some(1.0))], &HeightBin::from_edges(&[100.0, 200.0]), &MetricBands::default()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 4);
        assert!(text.lines().any(|l| l.starts_with(",,latency_ms,0,0")));
    }

    fn arb_records() -> impl Strategy<Value = Vec<TrialRecord>> {
        proptest::collection::vec(
            (0.1f64..400.0, proptest::option::of(-120.0f64..-40.0), proptest::option::of(0.0f64..1000.0)),
            0..60,
        )
        .prop_map(|v| {
            v.into_iter()
                .map(|(h, rsrp, lat)| TrialRecord { rsrp_dbm: rsrp, ..rec(h, lat) })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn no_record_dropped(recs in arb_records()) {
            let s = summarize(&recs, &HeightBin::from_edges(&[60.0, 120.0, 250.0]), &MetricBands::default()).unwrap();
            prop_assert_eq!(s.total_count(), recs.len());
        }

        #[test]
        fn permutation_invariant(recs in arb_records(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut shuffled = recs.clone();
            shuffled.shuffle(&mut crate::seed::rng(seed, "perm", &[]));
            let bins = HeightBin::from_edges(&[100.0, 300.0]);
            let bands = MetricBands { rsrp_dbm: Some(Band::new(-90.0, -75.0)), ..Default::default() };
            prop_assert_eq!(summarize(&recs, &bins, &bands).unwrap(), summarize(&shuffled, &bins, &bands).unwrap());
        }

        #[test]
        fn percentiles_match_sort_and_index(mut v in proptest::collection::vec(-1e6f64..1e6, 1..200), p in 0u32..=100) {
            v.sort_by(f64::total_cmp);
            // Smallest value with at least p% of the data at or below it.
            let oracle = *v.iter().find(|&&x| {
                let at_or_below = v.iter().filter(|&&y| y <= x).count();
                100 * at_or_below >= p as usize * v.len()
            }).unwrap();
            prop_assert_eq!(nearest_rank(&v, p), Some(oracle));
        }

        #[test]
        fn percentiles_ordered(recs in arb_records()) {
            let s = summarize(&recs, &HeightBin::from_edges(&[400.0]), &MetricBands::default()).unwrap();
            for m in &s.bins[0].stats.metrics {
                if let (Some(a), Some(b), Some(c)) = (m.p25, m.median, m.p75) {
                    prop_assert!(a <= b && b <= c);
                }
            }
        }
    }
}
