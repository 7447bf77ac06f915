//! Hexagonal multi-site layouts and UE drops.
//!
//! Sites sit on a hexagonal lattice with spacing `isd_m`; ring `k` holds `6k`
//! sites, so a layout with `r` rings has `1 + 3r(r+1)` sites. Each site
//! carries three sectors with boresights at 0, 120 and 240 degrees.
//!
//! Measured UEs are dropped only around the center site, inside a disc of
//! radius `isd / sqrt(3)` that approximates the dominance area of its three
//! cells, while every site in the layout transmits.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Height of indoor and outdoor (terrestrial) UEs.
pub const TERRESTRIAL_HEIGHT_M: f64 = 1.5;

/// Minimum horizontal BS-UE distance enforced at placement.
pub const MIN_BS_DISTANCE_M: f64 = 35.0;

pub const DEFAULT_AERIAL_HEIGHTS_M: [f64; 6] = [15.0, 30.0, 60.0, 100.0, 200.0, 300.0];

/// Per-cell radio configuration shared by every cell of a layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellTemplate {
    pub tx_power_dbm: f64,
    pub fc_ghz: f64,
    pub bw_hz: f64,
    pub bs_height_m: f64,
    pub downtilt_deg: f64,
}

impl Default for CellTemplate {
    fn default() -> Self {
        Self { tx_power_dbm: 46.0, fc_ghz: 2.0, bw_hz: 20e6, bs_height_m: 25.0, downtilt_deg: 6.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub cell_id: usize,
    pub site_index: usize,
    /// Boresight azimuth in degrees, `[0, 360)`, counter-clockwise from +x.
    pub azimuth_deg: f64,
    pub downtilt_deg: f64,
    pub tx_power_dbm: f64,
    pub fc_ghz: f64,
    pub bw_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub sites: Vec<[f64; 2]>,
    pub isd_m: f64,
    pub bs_height_m: f64,
    pub cells: Vec<Cell>,
    pub rings: u32,
}

impl NetworkLayout {
    pub fn site_of(&self, cell: &Cell) -> [f64; 2] {
        self.sites[cell.site_index]
    }

    /// Radius of the disc in which measured UEs are dropped.
    pub fn serving_radius_m(&self) -> f64 {
        self.isd_m / 3f64.sqrt()
    }

    /// Whether a horizontal point lies inside the layout's bounding hexagon
    /// (flat-topped, circumradius `(rings + 1) * isd`).
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let r = f64::from(self.rings + 1) * self.isd_m;
        let apothem = r * 3f64.sqrt() / 2.0;
        // Corners of the lattice hexagon point along the site rows (0 deg).
        (0..6).all(|k| {
            let a = PI / 6.0 + f64::from(k) * PI / 3.0;
            x * a.cos() + y * a.sin() <= apothem + 1e-9
        })
    }

    /// Write the layout as CSV, one row per cell.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "cell_id",
            "site_index",
            "site_x_m",
            "site_y_m",
            "azimuth_deg",
            "downtilt_deg",
            "tx_power_dbm",
            "fc_ghz",
            "bw_hz",
        ])?;
        for c in &self.cells {
            let [x, y] = self.sites[c.site_index];
            out.write_record([
                c.cell_id.to_string(),
                c.site_index.to_string(),
                x.to_string(),
                y.to_string(),
                c.azimuth_deg.to_string(),
                c.downtilt_deg.to_string(),
                c.tx_power_dbm.to_string(),
                c.fc_ghz.to_string(),
                c.bw_hz.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Axial lattice coordinates with hex distance exactly `k` from the origin.
fn ring_coords(k: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::with_capacity((6 * k) as usize);
    for q in -k..=k {
        for r in -k..=k {
            let s = -q - r;
            if q.abs().max(r.abs()).max(s.abs()) == k {
                out.push((q, r));
            }
        }
    }
    out
}

pub fn build_hex_layout(rings: i64, isd_m: f64, template: &CellTemplate) -> Result<NetworkLayout> {
    if rings < 0 {
        return Err(Error::invalid("rings", format!("must be >= 0, got {rings}")));
    }
    if !(isd_m > 0.0 && isd_m.is_finite()) {
        return Err(Error::invalid("isd_m", format!("must be positive, got {isd_m}")));
    }
    validate_template(template)?;

    let half_sqrt3 = 3f64.sqrt() / 2.0;
    let mut sites = vec![[0.0, 0.0]];
    for k in 1..=rings {
        let mut ring: Vec<([f64; 2], f64)> = ring_coords(k)
            .into_iter()
            .map(|(q, r)| {
                let x = isd_m * (q as f64 + r as f64 / 2.0);
                let y = isd_m * (r as f64 * half_sqrt3);
                let mut angle = y.atan2(x);
                if angle < 0.0 {
                    angle += 2.0 * PI;
                }
                ([x, y], angle)
            })
            .collect();
        ring.sort_by(|a, b| a.1.total_cmp(&b.1));
        sites.extend(ring.into_iter().map(|(p, _)| p));
    }

    let cells = (0..sites.len())
        .flat_map(|site_index| {
            (0..3).map(move |sector| Cell {
                cell_id: site_index * 3 + sector,
                site_index,
                azimuth_deg: 120.0 * sector as f64,
                downtilt_deg: template.downtilt_deg,
                tx_power_dbm: template.tx_power_dbm,
                fc_ghz: template.fc_ghz,
                bw_hz: template.bw_hz,
            })
        })
        .collect();

    Ok(NetworkLayout { sites, isd_m, bs_height_m: template.bs_height_m, cells, rings: rings as u32 })
}

fn validate_template(t: &CellTemplate) -> Result<()> {
    let positive = [
        ("tx_power_dbm", t.tx_power_dbm),
        ("fc_ghz", t.fc_ghz),
        ("bw_hz", t.bw_hz),
        ("bs_height_m", t.bs_height_m),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("must be positive, got {v}")));
        }
    }
    if !t.downtilt_deg.is_finite() {
        return Err(Error::invalid("downtilt_deg", "must be finite"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UeClass {
    Indoor,
    Outdoor,
    Aerial,
}

impl UeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            UeClass::Indoor => "indoor",
            UeClass::Outdoor => "outdoor",
            UeClass::Aerial => "aerial",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "indoor" => Some(UeClass::Indoor),
            "outdoor" => Some(UeClass::Outdoor),
            "aerial" => Some(UeClass::Aerial),
            _ => None,
        }
    }
}

impl std::fmt::Display for UeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeDrop {
    /// `[x, y, z]` in meters; `z` is the height above ground.
    pub position: [f64; 3],
    pub ue_class: UeClass,
    pub drop_index: usize,
}

impl UeDrop {
    pub fn height_m(&self) -> f64 {
        self.position[2]
    }
}

/// How many UEs of each class to drop. Aerial UEs are dropped
/// `aerial_per_height` times at every height in `aerial_heights_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlacementSpec {
    pub indoor: usize,
    pub outdoor: usize,
    pub aerial_per_height: usize,
    pub aerial_heights_m: Vec<f64>,
}

impl Default for PlacementSpec {
    fn default() -> Self {
        Self {
            indoor: 300,
            outdoor: 300,
            aerial_per_height: 300,
            aerial_heights_m: DEFAULT_AERIAL_HEIGHTS_M.to_vec(),
        }
    }
}

impl PlacementSpec {
    pub fn empty() -> Self {
        Self { indoor: 0, outdoor: 0, aerial_per_height: 0, aerial_heights_m: Vec::new() }
    }

    pub fn total(&self) -> usize {
        self.indoor + self.outdoor + self.aerial_per_height * self.aerial_heights_m.len()
    }

    pub fn validate(&self) -> Result<()> {
        for &h in &self.aerial_heights_m {
            if !(h > TERRESTRIAL_HEIGHT_M && h.is_finite()) {
                return Err(Error::invalid(
                    "aerial_heights_m",
                    format!("every height must exceed {TERRESTRIAL_HEIGHT_M} m, got {h}"),
                ));
            }
        }
        Ok(())
    }

    /// Class and height of each drop, in drop-index order: indoor, outdoor,
    /// then aerial grouped by height in the listed order.
    fn slots(&self) -> Vec<(UeClass, f64)> {
        let mut v = Vec::with_capacity(self.total());
        v.extend(std::iter::repeat_n((UeClass::Indoor, TERRESTRIAL_HEIGHT_M), self.indoor));
        v.extend(std::iter::repeat_n((UeClass::Outdoor, TERRESTRIAL_HEIGHT_M), self.outdoor));
        for &h in &self.aerial_heights_m {
            v.extend(std::iter::repeat_n((UeClass::Aerial, h), self.aerial_per_height));
        }
        v
    }
}

/// Drop UEs uniformly over the annulus `[MIN_BS_DISTANCE_M, isd/sqrt(3)]`
/// around the center site. Each drop draws from its own substream, so
/// drop `i` is the same regardless of the counts before it.
pub fn place_ues(layout: &NetworkLayout, spec: &PlacementSpec, seed: u64) -> Result<Vec<UeDrop>> {
    if layout.cells.is_empty() || layout.sites.is_empty() {
        return Err(Error::EmptyLayout);
    }
    spec.validate()?;
    let r_max = layout.serving_radius_m();
    let r_min = MIN_BS_DISTANCE_M.min(r_max / 2.0);

    Ok(spec
        .slots()
        .into_iter()
        .enumerate()
        .map(|(drop_index, (ue_class, z))| {
            let mut rng = seed::rng(seed, "place", &[drop_index as u64]);
            // Area-uniform radius on the annulus.
            let u: f64 = rng.random();
            let r = (r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            UeDrop { position: [r * theta.cos(), r * theta.sin(), z], ue_class, drop_index }
        })
        .collect())
}
