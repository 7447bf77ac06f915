//! Per-UE, per-cell coupling and the derived RSRP / RSSI / SINR measurements.
//!
//! Propagation follows the urban-macro family with an aerial extension:
//!
//! | regime              | LOS probability                                     | NLOS pathloss                                             |
//! |---------------------|-----------------------------------------------------|-----------------------------------------------------------|
//! | `h <= 22.5 m`       | `1` if `d <= 18`, else `18/d + e^(-d/63)(1 - 18/d)`  | `13.54 + 39.08 log d3 + 20 log fc - 0.6 (h - 1.5)`         |
//! | `22.5 < h < 100 m`  | `1` if `d <= d1`, else `d1/d + e^(-d/p1)(1 - d1/d)`  | `-17.5 + (46 - 7 log h) log d3 + 20 log(40 pi fc / 3)`     |
//! | `h >= 100 m`        | `1`                                                 | as above                                                  |
//!
//! with `p1 = 4300 log h - 3800`, `d1 = max(460 log h - 700, 18)`. The LOS
//! pathloss is `28 + 22 log d3 + 20 log fc` everywhere and NLOS is never
//! allowed below it.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deployment::{NetworkLayout, UeClass, UeDrop};
use crate::error::{Error, Result};
use crate::seed;

/// Boundary between the terrestrial and aerial propagation regimes.
pub const AERIAL_REGIME_MIN_HEIGHT_M: f64 = 22.5;
/// Height from which LOS is certain.
pub const ALWAYS_LOS_HEIGHT_M: f64 = 100.0;
pub const MIN_UE_HEIGHT_M: f64 = 1.5;
pub const MIN_PATHLOSS_DISTANCE_M: f64 = 10.0;

pub const ANTENNA_MAX_GAIN_DBI: f64 = 8.0;
const ANTENNA_H_BEAMWIDTH_DEG: f64 = 65.0;
const ANTENNA_V_BEAMWIDTH_DEG: f64 = 10.0;
const ANTENNA_ATTENUATION_CAP_DB: f64 = 30.0;

const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub shadow_sigma_los_db: f64,
    pub shadow_sigma_nlos_db: f64,
    pub indoor_penetration_db: f64,
    pub ue_noise_figure_db: f64,
    /// Resource elements over which wideband power is spread for RSRP.
    pub n_subcarriers: u32,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            shadow_sigma_los_db: 4.0,
            shadow_sigma_nlos_db: 6.0,
            indoor_penetration_db: 20.0,
            ue_noise_figure_db: 9.0,
            n_subcarriers: 1200,
        }
    }
}

impl ChannelParams {
    /// No shadowing; other values default.
    pub fn deterministic() -> Self {
        Self { shadow_sigma_los_db: 0.0, shadow_sigma_nlos_db: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shadow_sigma_los_db >= 0.0) {
            return Err(Error::invalid("shadow_sigma_los_db", "must be >= 0"));
        }
        if !(self.shadow_sigma_nlos_db >= 0.0) {
            return Err(Error::invalid("shadow_sigma_nlos_db", "must be >= 0"));
        }
        if !self.indoor_penetration_db.is_finite() {
            return Err(Error::invalid("indoor_penetration_db", "must be finite"));
        }
        if !self.ue_noise_figure_db.is_finite() {
            return Err(Error::invalid("ue_noise_figure_db", "must be finite"));
        }
        if self.n_subcarriers == 0 {
            return Err(Error::invalid("n_subcarriers", "must be > 0"));
        }
        Ok(())
    }

    fn rsrp_offset_db(&self) -> f64 {
        10.0 * f64::from(self.n_subcarriers).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerCellMeasurement {
    pub cell_id: usize,
    pub rsrp_dbm: f64,
    /// Wideband received power.
    pub rx_power_dbm: f64,
    pub los: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioSample {
    pub drop: UeDrop,
    /// Sorted by descending RSRP, ties by ascending cell id.
    pub cells: Vec<PerCellMeasurement>,
    pub rssi_dbm: f64,
    pub serving_cell_id: usize,
    pub sinr_db: f64,
}

impl RadioSample {
    /// Number of cells whose RSRP is within `margin_db` of the strongest one
    /// (the strongest included).
    pub fn cells_within_db(&self, margin_db: f64) -> usize {
        let best = self.cells[0].rsrp_dbm;
        self.cells.iter().take_while(|c| c.rsrp_dbm >= best - margin_db).count()
    }
}

/// Order for per-cell measurements: strongest first, then lower cell id.
pub fn measurement_order(a: &PerCellMeasurement, b: &PerCellMeasurement) -> Ordering {
    b.rsrp_dbm.total_cmp(&a.rsrp_dbm).then(a.cell_id.cmp(&b.cell_id))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn los_probability(d2d_m: f64, h_ut_m: f64) -> Result<f64> {
    if !(h_ut_m >= MIN_UE_HEIGHT_M) {
        return Err(Error::HeightBelowModelFloor(h_ut_m));
    }
    if !(d2d_m >= 0.0) {
        return Err(Error::invalid("d2d_m", format!("must be >= 0, got {d2d_m}")));
    }
    if h_ut_m >= ALWAYS_LOS_HEIGHT_M {
        return Ok(1.0);
    }
    let (d1, p1) = if h_ut_m <= AERIAL_REGIME_MIN_HEIGHT_M {
        (18.0, 63.0)
    } else {
        let lh = h_ut_m.log10();
        ((460.0 * lh - 700.0).max(18.0), 4300.0 * lh - 3800.0)
    };
    if d2d_m <= d1 {
        return Ok(1.0);
    }
    Ok(d1 / d2d_m + (-d2d_m / p1).exp() * (1.0 - d1 / d2d_m))
}

pub fn pathloss_db(d3d_m: f64, fc_ghz: f64, h_ut_m: f64, los: bool) -> Result<f64> {
    if !(d3d_m >= MIN_PATHLOSS_DISTANCE_M) {
        return Err(Error::DistanceBelowModelFloor(d3d_m));
    }
    if !(fc_ghz > 0.0) {
        return Err(Error::invalid("fc_ghz", format!("must be positive, got {fc_ghz}")));
    }
    if !(h_ut_m >= MIN_UE_HEIGHT_M) {
        return Err(Error::HeightBelowModelFloor(h_ut_m));
    }
    let log_d = d3d_m.log10();
    let pl_los = 28.0 + 22.0 * log_d + 20.0 * fc_ghz.log10();
    if los {
        return Ok(pl_los);
    }
    let pl_nlos = if h_ut_m <= AERIAL_REGIME_MIN_HEIGHT_M {
        13.54 + 39.08 * log_d + 20.0 * fc_ghz.log10() - 0.6 * (h_ut_m - 1.5)
    } else {
        -17.5 + (46.0 - 7.0 * h_ut_m.log10()) * log_d + 20.0 * (40.0 * PI * fc_ghz / 3.0).log10()
    };
    Ok(pl_nlos.max(pl_los))
}

/// Sector antenna gain. `elevation_deg` is the angle below the horizon seen
/// from the antenna (positive for UEs below it), `downtilt_deg` likewise.
pub fn antenna_gain_dbi(azimuth_off_deg: f64, elevation_deg: f64, downtilt_deg: f64) -> f64 {
    let cap = ANTENNA_ATTENUATION_CAP_DB;
    let a_h = -(12.0 * (azimuth_off_deg / ANTENNA_H_BEAMWIDTH_DEG).powi(2)).min(cap);
    let a_v = -(12.0 * ((elevation_deg - downtilt_deg) / ANTENNA_V_BEAMWIDTH_DEG).powi(2)).min(cap);
    ANTENNA_MAX_GAIN_DBI - (-(a_h + a_v)).min(cap)
}

pub fn noise_power_dbm(bw_hz: f64, noise_figure_db: f64) -> Result<f64> {
    if !(bw_hz > 0.0) {
        return Err(Error::invalid("bw_hz", format!("must be positive, got {bw_hz}")));
    }
    Ok(THERMAL_NOISE_DBM_PER_HZ + 10.0 * bw_hz.log10() + noise_figure_db)
}

/// Wrap an angle in degrees to `[-180, 180]`.
fn wrap_deg(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 && a > 0.0 {
        180.0
    } else {
        w
    }
}

pub fn compute_sample(layout: &NetworkLayout, drop: &UeDrop, params: &ChannelParams, seed: u64) -> Result<RadioSample> {
    let first = layout.cells.first().ok_or(Error::EmptyLayout)?;
    let [ux, uy, uz] = drop.position;
    let indoor = drop.ue_class == UeClass::Indoor;

    let mut cells = Vec::with_capacity(layout.cells.len());
    let mut total_mw = 0.0;
    for cell in &layout.cells {
        let [sx, sy] = layout.site_of(cell);
        let (dx, dy) = (ux - sx, uy - sy);
        let d2d = dx.hypot(dy);
        let dz = layout.bs_height_m - uz;
        let d3d = d2d.hypot(dz);

        // Draw order is fixed (coin, then shadow) so streams never shift.
        let mut rng = seed::rng(seed, "radio", &[drop.drop_index as u64, cell.cell_id as u64]);
        let coin: f64 = rng.random();
        let z: f64 = StandardNormal.sample(&mut rng);

        let los = !indoor && coin < los_probability(d2d, uz)?;
        let sigma = if los { params.shadow_sigma_los_db } else { params.shadow_sigma_nlos_db };

        let azimuth_off = wrap_deg(dy.atan2(dx).to_degrees() - cell.azimuth_deg);
        let elevation = dz.atan2(d2d).to_degrees();
        let gain = antenna_gain_dbi(azimuth_off, elevation, cell.downtilt_deg);

        let mut rx = cell.tx_power_dbm + gain - pathloss_db(d3d, cell.fc_ghz, uz, los)? - sigma * z;
        if indoor {
            rx -= params.indoor_penetration_db;
        }
        total_mw += db_to_linear(rx);
        cells.push(PerCellMeasurement {
            cell_id: cell.cell_id,
            rsrp_dbm: rx - params.rsrp_offset_db(),
            rx_power_dbm: rx,
            los,
        });
    }
    cells.sort_by(measurement_order);

    let noise_mw = db_to_linear(noise_power_dbm(first.bw_hz, params.ue_noise_figure_db)?);
    let serving_mw = db_to_linear(cells[0].rx_power_dbm);
    let interference_mw = total_mw - serving_mw;
    Ok(RadioSample {
        drop: *drop,
        serving_cell_id: cells[0].cell_id,
        rssi_dbm: linear_to_db(total_mw + noise_mw),
        sinr_db: linear_to_db(serving_mw / (interference_mw.max(0.0) + noise_mw)),
        cells,
    })
}

/// [`compute_sample`] over many drops, in parallel on the current rayon pool.
/// Output order follows `drops`.
pub fn compute_samples(layout: &NetworkLayout, drops: &[UeDrop], params: &ChannelParams, seed: u64) -> Result<Vec<RadioSample>> {
    params.validate()?;
    drops.par_iter().map(|d| compute_sample(layout, d, params, seed)).collect()
}

/// Write radio samples as CSV with the eight strongest RSRPs.
pub fn write_samples_csv<W: Write>(samples: &[RadioSample], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> =
        ["drop_index", "ue_class", "height_m", "serving_cell_id", "sinr_db", "rssi_dbm"].map(String::from).into();
    header.extend((1..=8).map(|i| format!("rsrp_{i}")));
    out.write_record(&header)?;
    for s in samples {
        let mut row = vec![
            s.drop.drop_index.to_string(),
            s.drop.ue_class.to_string(),
            s.drop.height_m().to_string(),
            s.serving_cell_id.to_string(),
            s.sinr_db.to_string(),
            s.rssi_dbm.to_string(),
        ];
        row.extend((0..8).map(|i| s.cells.get(i).map(|c| c.rsrp_dbm.to_string()).unwrap_or_default()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{build_hex_layout, place_ues, CellTemplate, PlacementSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn los_probability_examples() {
        assert_eq!(los_probability(5000.0, 150.0).unwrap(), 1.0);
        assert_eq!(los_probability(10.0, 1.5).unwrap(), 1.0);
        // 0.18 + e^(-100/63) * 0.82, evaluated by hand
        assert_abs_diff_eq!(los_probability(100.0, 1.5).unwrap(), 0.34767, epsilon = 5e-5);
        assert!(los_probability(100.0, 1.0).is_err());
        assert!(los_probability(-1.0, 10.0).is_err());
    }

    #[test]
    fn los_probability_monotone_in_distance() {
        for h in [1.5, 10.0, 22.5, 30.0, 60.0, 99.0, 100.0, 300.0] {
            let mut prev = f64::INFINITY;
            for i in 0..400 {
                let p = los_probability(i as f64 * 5.0, h).unwrap();
                assert!((0.0..=1.0).contains(&p));
                assert!(p <= prev + 1e-15, "h={h}");
                prev = p;
            }
        }
    }

    #[test]
    fn pathloss_examples() {
        assert_abs_diff_eq!(pathloss_db(100.0, 2.0, 1.5, true).unwrap(), 78.0206, epsilon = 1e-4);
        assert_abs_diff_eq!(pathloss_db(1000.0, 2.0, 1.5, true).unwrap(), 100.0206, epsilon = 1e-4);
        let los = pathloss_db(500.0, 2.0, 1.5, true).unwrap();
        assert!(pathloss_db(500.0, 2.0, 1.5, false).unwrap() >= los);
        assert!(matches!(pathloss_db(9.99, 2.0, 1.5, true), Err(Error::DistanceBelowModelFloor(_))));
        assert!(pathloss_db(100.0, 0.0, 1.5, true).is_err());
    }

    #[test]
    fn nlos_never_below_los() {
        for h in [1.5, 15.0, 22.5, 23.0, 60.0, 150.0, 300.0] {
            for d in [10.0, 35.0, 100.0, 500.0, 2000.0] {
                let los = pathloss_db(d, 2.0, h, true).unwrap();
                assert!(pathloss_db(d, 2.0, h, false).unwrap() >= los);
            }
        }
    }

    #[test]
    fn pathloss_strictly_increasing_in_distance() {
        for h in [1.5, 15.0, 60.0, 300.0] {
            for los in [true, false] {
                let mut prev = f64::NEG_INFINITY;
                for i in 0..200 {
                    let pl = pathloss_db(10.0 + i as f64 * 10.0, 2.0, h, los).unwrap();
                    assert!(pl > prev);
                    prev = pl;
                }
            }
        }
    }

    #[test]
    fn antenna_examples() {
        assert_abs_diff_eq!(antenna_gain_dbi(0.0, 6.0, 6.0), 8.0);
        assert_abs_diff_eq!(antenna_gain_dbi(65.0, 6.0, 6.0), -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(antenna_gain_dbi(180.0, 90.0, 6.0), -22.0);
        assert_abs_diff_eq!(antenna_gain_dbi(-65.0, 6.0, 6.0), -4.0, epsilon = 1e-12);
    }

    #[test]
    fn noise_examples() {
        assert_abs_diff_eq!(noise_power_dbm(20e6, 0.0).unwrap(), -100.99, epsilon = 5e-3);
        assert_abs_diff_eq!(noise_power_dbm(20e6, 9.0).unwrap(), -91.99, epsilon = 5e-3);
        assert_eq!(noise_power_dbm(1.0, 0.0).unwrap(), -174.0);
        assert!(noise_power_dbm(0.0, 0.0).is_err());
    }

    #[test]
    fn rssi_single_cell_plus_noise() {
        // 10 log10(1e-8 + 10^-10.1)
        let rssi = linear_to_db(db_to_linear(-80.0) + db_to_linear(-101.0));
        assert_abs_diff_eq!(rssi, -79.97, epsilon = 5e-3);
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_deg(0.0), 0.0);
        assert_eq!(wrap_deg(190.0), -170.0);
        assert_eq!(wrap_deg(-190.0), 170.0);
        assert_eq!(wrap_deg(180.0), 180.0);
        assert_eq!(wrap_deg(360.0), 0.0);
    }

    fn single_cell_layout() -> NetworkLayout {
        let mut l = build_hex_layout(0, 500.0, &CellTemplate::default()).unwrap();
        l.cells.truncate(1);
        l
    }

    #[test]
    fn single_cell_sinr_is_snr() {
        let l = single_cell_layout();
        let spec = PlacementSpec { outdoor: 20, ..PlacementSpec::empty() };
        let p = ChannelParams::deterministic();
        let noise = noise_power_dbm(20e6, p.ue_noise_figure_db).unwrap();
        for d in place_ues(&l, &spec, 3).unwrap() {
            let s = compute_sample(&l, &d, &p, 3).unwrap();
            assert_abs_diff_eq!(s.sinr_db, s.cells[0].rx_power_dbm - noise, epsilon = 1e-9);
        }
    }

    #[test]
    fn sample_invariants() {
        let l = build_hex_layout(2, 500.0, &CellTemplate::default()).unwrap();
        let spec = PlacementSpec { indoor: 20, outdoor: 20, aerial_per_height: 20, ..PlacementSpec::default() };
        let p = ChannelParams::default();
        let drops = place_ues(&l, &spec, 11).unwrap();
        let samples = compute_samples(&l, &drops, &p, 11).unwrap();
        let noise_mw = db_to_linear(noise_power_dbm(20e6, p.ue_noise_figure_db).unwrap());
        for s in &samples {
            assert_eq!(s.cells.len(), 57);
            assert_eq!(s.serving_cell_id, s.cells[0].cell_id);
            assert!(s.cells.windows(2).all(|w| measurement_order(&w[0], &w[1]) == Ordering::Less));
            assert!(s.rssi_dbm >= s.cells[0].rx_power_dbm);
            let sum: f64 = s.cells.iter().map(|c| db_to_linear(c.rx_power_dbm)).sum::<f64>() + noise_mw;
            assert!((db_to_linear(s.rssi_dbm) - sum).abs() <= 1e-9 * sum);
            for c in &s.cells {
                assert_abs_diff_eq!(c.rsrp_dbm, c.rx_power_dbm - 10.0 * 1200f64.log10(), epsilon = 1e-9);
            }
            if s.drop.ue_class == UeClass::Indoor {
                assert!(s.cells.iter().all(|c| !c.los));
            }
            if s.drop.height_m() >= 100.0 {
                assert!(s.cells.iter().all(|c| c.los));
            }
        }
    }

    #[test]
    fn sample_is_deterministic_and_order_independent() {
        let l = build_hex_layout(1, 500.0, &CellTemplate::default()).unwrap();
        let drops = place_ues(&l, &PlacementSpec { outdoor: 10, ..PlacementSpec::empty() }, 5).unwrap();
        let p = ChannelParams::default();
        let forward: Vec<_> = drops.iter().map(|d| compute_sample(&l, d, &p, 5).unwrap()).collect();
        let mut backward: Vec<_> = drops.iter().rev().map(|d| compute_sample(&l, d, &p, 5).unwrap()).collect();
        backward.reverse();
        assert_eq!(forward, backward);
        assert_eq!(forward, compute_samples(&l, &drops, &p, 5).unwrap());
    }

    #[test]
    fn empty_layout_rejected() {
        let mut l = single_cell_layout();
        l.cells.clear();
        let d = UeDrop { position: [100.0, 0.0, 1.5], ue_class: UeClass::Outdoor, drop_index: 0 };
        assert!(matches!(compute_sample(&l, &d, &ChannelParams::default(), 0), Err(Error::EmptyLayout)));
    }

    #[test]
    fn pathloss_floor_propagates() {
        let l = single_cell_layout();
        let d = UeDrop { position: [1.0, 0.0, 25.0], ue_class: UeClass::Aerial, drop_index: 0 };
        assert!(matches!(compute_sample(&l, &d, &ChannelParams::default(), 0), Err(Error::DistanceBelowModelFloor(_))));
    }

    #[test]
    fn csv_pads_missing_rsrps() {
        let l = build_hex_layout(0, 500.0, &CellTemplate::default()).unwrap();
        let d = place_ues(&l, &PlacementSpec { outdoor: 1, ..PlacementSpec::empty() }, 0).unwrap();
        let s = compute_samples(&l, &d, &ChannelParams::default(), 0).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "drop_index,ue_class,height_m,serving_cell_id,sinr_db,rssi_dbm,rsrp_1,rsrp_2,rsrp_3,rsrp_4,rsrp_5,rsrp_6,rsrp_7,rsrp_8"
        );
        assert!(lines[1].ends_with(",,,,,"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sorting_tie_break(values in proptest::collection::vec((0usize..20, -5i32..5), 1..30)) {
                let mut v: Vec<_> = values
                    .iter()
                    .enumerate()
                    .map(|(i, &(_, r))| PerCellMeasurement { cell_id: i, rsrp_dbm: f64::from(r), rx_power_dbm: 0.0, los: false })
                    .collect();
                v.reverse();
                v.sort_by(measurement_order);
                for w in v.windows(2) {
                    prop_assert!(w[0].rsrp_dbm > w[1].rsrp_dbm || (w[0].rsrp_dbm == w[1].rsrp_dbm && w[0].cell_id < w[1].cell_id));
                }
            }
        }
    }
}
