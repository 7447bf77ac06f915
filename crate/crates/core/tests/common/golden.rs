//! Checks of the built-in requirement registry against the transcribed
//! reference tables in `tests/golden/`. Shared with the CLI acceptance suite.

use std::collections::BTreeSet;

use dronecell_core::requirements::{expected_5g_rates, lookup_requirements, Registry};

const REQUIREMENT_LEVELS: &str = include_str!("../golden/requirement_levels.tsv");
const REFERENCE_RATES: &str = include_str!("../golden/reference_rates.tsv");

fn rows(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines().filter(|l| !l.is_empty() && !l.starts_with('#')).map(|l| l.split('\t').collect())
}

/// "Uplink 4 Mbps" -> 4e6
fn parse_rate(text: &str) -> f64 {
    let parts: Vec<&str> = text.split_whitespace().collect();
    let n: f64 = parts[parts.len() - 2].parse().unwrap();
    n * match parts[parts.len() - 1] {
        "kbps" => 1e3,
        "Mbps" => 1e6,
        "Gbps" => 1e9,
        u => panic!("unit {u}"),
    }
}

/// "< 400ms" / "0.1 m" / "< 50m" -> number
fn parse_bound(text: &str) -> f64 {
    text.trim_start_matches('<').trim().trim_end_matches("ms").trim_end_matches('m').trim().parse().unwrap()
}

/// "50-100 m" -> (50, 100); "10 m" -> (10, 10)
fn parse_heights(text: &str) -> (f64, f64) {
    let body = text.trim_end_matches('m').trim();
    match body.split_once('-') {
        Some((a, b)) => (a.parse().unwrap(), b.parse().unwrap()),
        None => {
            let v = body.parse().unwrap();
            (v, v)
        }
    }
}

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

pub fn check_requirement_levels() -> Result<usize, String> {
    let reg = Registry::builtin();
    let profiles: Vec<_> = reg.application_names().iter().map(|n| lookup_requirements(n).unwrap()).collect();
    let mut checked = 0;
    let (mut alt, mut wide, mut rate, mut lat, mut pos) = (0, 0, 0, 0, 0);
    for r in rows(REQUIREMENT_LEVELS) {
        checked += 1;
        match r[0] {
            "altitude" => {
                let a = &reg.altitude_coverage[alt];
                alt += 1;
                ensure(a.height == r[1] && a.typical_use_case == r[2], || format!("altitude row {alt}: {a:?}"))?;
                let (lo, hi) = parse_heights(r[1]);
                ensure((a.min_m, a.max_m) == (lo, hi), || format!("altitude {}: bounds {:?}", r[1], (a.min_m, a.max_m)))?;
                ensure(
                    profiles.iter().any(|p| p.altitude_band.label == r[1] && (p.altitude_band.min_m, p.altitude_band.max_m) == (lo, hi)),
                    || format!("altitude band {} unreachable by lookup", r[1]),
                )?;
            }
            "wide_area" => {
                let w = &reg.wide_area_coverage[wide];
                wide += 1;
                ensure(w.area == r[1] && w.typical_use_case == r[2], || format!("wide-area row {wide}: {w:?}"))?;
                ensure(profiles.iter().any(|p| p.coverage_scenario == w.scenario), || format!("scenario {:?} unused", w.scenario))?;
            }
            "data_rate" => {
                let d = &reg.data_rate[rate];
                rate += 1;
                let level: u8 = r[1].parse().unwrap();
                ensure(d.level == level && d.value == r[2] && d.typical_application == r[3], || format!("rate row: {d:?}"))?;
                let bps = parse_rate(r[2]);
                ensure(
                    profiles.iter().any(|p| p.data_rate_level == level && p.uplink_rate_bps == bps),
                    || format!("rate level {level} ({bps} bps) unreachable by lookup"),
                )?;
            }
            "latency" => {
                let l = &reg.latency[lat];
                lat += 1;
                let level: u8 = r[1].parse().unwrap();
                ensure(
                    l.level == level && l.end_to_end == r[2] && l.network == r[3] && l.typical_application == r[4],
                    || format!("latency row: {l:?}"),
                )?;
                let (e2e, net) = (parse_bound(r[2]), parse_bound(r[3]));
                ensure(
                    profiles.iter().any(|p| p.latency_level == level && p.e2e_latency_ms == e2e && p.network_latency_ms == net),
                    || format!("latency level {level} ({e2e}/{net} ms) unreachable by lookup"),
                )?;
            }
            "positioning" => {
                let p = &reg.positioning[pos];
                pos += 1;
                let level: u8 = r[1].parse().unwrap();
                ensure(p.level == level && p.accuracy == r[2] && p.typical_application == r[3], || format!("positioning row: {p:?}"))?;
                let m = parse_bound(r[2]);
                ensure(
                    profiles.iter().any(|q| q.positioning_level == level && q.positioning_accuracy_m == m),
                    || format!("positioning level {level} ({m} m) unreachable by lookup"),
                )?;
            }
            other => return Err(format!("unknown dimension {other}")),
        }
    }
    ensure(
        (alt, wide, rate, lat, pos)
            == (
                reg.altitude_coverage.len(),
                reg.wide_area_coverage.len(),
                reg.data_rate.len(),
                reg.latency.len(),
                reg.positioning.len(),
            ),
        || "registry has rows the table lacks".to_string(),
    )?;
    ensure((alt, rate, lat, pos) == (4, 5, 2, 4), || format!("row counts {:?}", (alt, rate, lat, pos)))?;
    Ok(checked)
}

pub fn check_reference_rates() -> Result<usize, String> {
    let mut keys = BTreeSet::new();
    let mut checked = 0;
    for r in rows(REFERENCE_RATES) {
        let v: Vec<f64> = r.iter().map(|c| c.parse().unwrap()).collect();
        let (fc, bw, radius) = (v[0], v[1], v[2]);
        keys.insert((fc.to_bits(), radius.to_bits()));
        let entries = expected_5g_rates(fc, radius).map_err(|e| e.to_string())?;
        ensure(
            entries.iter().any(|e| {
                e.bw_hz == bw && e.dl_peak_bps == v[3] && e.ul_peak_bps == v[4] && e.dl_edge_bps == v[5] && e.ul_edge_bps == v[6]
            }),
            || format!("no entry matches {r:?}; got {entries:?}"),
        )?;
        let expected_count = rows(REFERENCE_RATES).filter(|o| o[0].parse::<f64>().unwrap() == fc && o[2].parse::<f64>().unwrap() == radius).count();
        ensure(entries.len() == expected_count, || format!("{fc} GHz / {radius} m: {} entries", entries.len()))?;
        checked += 1;
    }
    let reg = Registry::builtin();
    ensure(reg.rates_5g.len() == checked, || format!("registry has {} rows, table {checked}", reg.rates_5g.len()))?;
    ensure(keys.len() == 4, || format!("{} distinct (band, radius) keys", keys.len()))?;
    Ok(checked)
}
