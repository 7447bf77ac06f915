//! Connectivity requirement levels for drone applications and KPI gating.
//!
//! The registry stores each requirement level once (altitude and wide-area
//! coverage, uplink data rate, end-to-end / network latency, positioning
//! accuracy) plus the expected 5G rate table. Applications are compositions
//! of one level per dimension. A built-in registry ships with the crate;
//! [`Registry::from_json`] loads an extended one with the same schema.
//!
//! Gating is boundary-inclusive in every dimension: rates and altitude pass
//! when `observed >= required`, latency and positioning error when
//! `observed <= required`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REGISTRY_SCHEMA_VERSION: u32 = 1;

const BUILTIN_REGISTRY: &str = include_str!("../data/registry.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageScenario {
    Hotspot,
    AlongLine,
    UrbanMacro,
    WideArea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AltitudeLevel {
    pub id: String,
    pub height: String,
    pub min_m: f64,
    pub max_m: f64,
    pub typical_use_case: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WideAreaLevel {
    pub scenario: CoverageScenario,
    pub area: String,
    pub typical_use_case: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataRateLevel {
    pub level: u8,
    pub value: String,
    pub uplink_bps: f64,
    pub typical_application: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyLevel {
    pub level: u8,
    pub end_to_end: String,
    pub network: String,
    pub e2e_ms: f64,
    pub network_ms: f64,
    pub typical_application: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositioningLevel {
    pub level: u8,
    pub accuracy: String,
    pub accuracy_m: f64,
    pub typical_application: String,
}

/// Downlink rate for command-and-control links, quoted as a range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlDownlink {
    pub text: String,
    pub min_bps: f64,
    pub max_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplicationEntry {
    pub name: String,
    pub altitude: String,
    pub scenario: CoverageScenario,
    pub data_rate_level: u8,
    pub latency_level: u8,
    pub positioning_level: u8,
    /// Attach the control downlink requirement to this application.
    pub control_downlink: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rate5gEntry {
    pub fc_ghz: f64,
    pub bw_hz: f64,
    pub cell_radius_m: f64,
    pub dl_peak_bps: f64,
    pub ul_peak_bps: f64,
    pub dl_edge_bps: f64,
    pub ul_edge_bps: f64,
    pub antenna_config: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    pub schema_version: u32,
    pub altitude_coverage: Vec<AltitudeLevel>,
    pub wide_area_coverage: Vec<WideAreaLevel>,
    pub data_rate: Vec<DataRateLevel>,
    pub latency: Vec<LatencyLevel>,
    pub positioning: Vec<PositioningLevel>,
    pub control_downlink: ControlDownlink,
    pub applications: Vec<ApplicationEntry>,
    pub rates_5g: Vec<Rate5gEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltitudeBand {
    pub label: String,
    pub min_m: f64,
    pub max_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementProfile {
    pub application: String,
    pub altitude_band: AltitudeBand,
    pub coverage_scenario: CoverageScenario,
    pub uplink_rate_bps: f64,
    pub downlink_rate_bps: Option<f64>,
    pub e2e_latency_ms: f64,
    pub network_latency_ms: f64,
    pub positioning_accuracy_m: f64,
    pub data_rate_level: u8,
    pub latency_level: u8,
    pub positioning_level: u8,
}

impl Registry {
    pub fn builtin() -> Registry {
        Registry::from_json(BUILTIN_REGISTRY).expect("built-in registry is valid")
    }

    pub fn from_json(text: &str) -> Result<Registry> {
        let reg: Registry = serde_json::from_str(text)?;
        reg.validate()?;
        Ok(reg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidRegistry(m));
        if self.schema_version != REGISTRY_SCHEMA_VERSION {
            return bad(format!("schema_version {} unsupported, expected {REGISTRY_SCHEMA_VERSION}", self.schema_version));
        }
        for l in &self.latency {
            if !(l.e2e_ms > 0.0 && l.network_ms > 0.0 && l.network_ms <= l.e2e_ms) {
                return bad(format!("latency level {}: need 0 < network <= end-to-end", l.level));
            }
        }
        if self.data_rate.iter().any(|r| !(r.uplink_bps > 0.0)) || self.positioning.iter().any(|p| !(p.accuracy_m > 0.0)) {
            return bad("levels must be positive".into());
        }
        for a in &self.altitude_coverage {
            if !(a.min_m > 0.0 && a.min_m <= a.max_m) {
                return bad(format!("altitude `{}`: need 0 < min <= max", a.id));
            }
        }
        let mut names = std::collections::HashSet::new();
        for app in &self.applications {
            if !names.insert(app.name.as_str()) {
                return bad(format!("duplicate application `{}`", app.name));
            }
            self.profile(app)?;
        }
        for r in &self.rates_5g {
            if r.dl_edge_bps > r.dl_peak_bps || r.ul_edge_bps > r.ul_peak_bps {
                return bad(format!("5G entry {} GHz / {} m: edge rate above peak", r.fc_ghz, r.cell_radius_m));
            }
        }
        Ok(())
    }

    pub fn application_names(&self) -> Vec<&str> {
        self.applications.iter().map(|a| a.name.as_str()).collect()
    }

    fn profile(&self, app: &ApplicationEntry) -> Result<RequirementProfile> {
        let missing = |what: &str| Error::InvalidRegistry(format!("application `{}` references unknown {what}", app.name));
        let alt = self.altitude_coverage.iter().find(|a| a.id == app.altitude).ok_or_else(|| missing("altitude"))?;
        if !self.wide_area_coverage.iter().any(|w| w.scenario == app.scenario) {
            return Err(missing("coverage scenario"));
        }
        let rate = self.data_rate.iter().find(|r| r.level == app.data_rate_level).ok_or_else(|| missing("data rate level"))?;
        let lat = self.latency.iter().find(|l| l.level == app.latency_level).ok_or_else(|| missing("latency level"))?;
        let pos = self
            .positioning
            .iter()
            .find(|p| p.level == app.positioning_level)
            .ok_or_else(|| missing("positioning level"))?;
        Ok(RequirementProfile {
            application: app.name.clone(),
            altitude_band: AltitudeBand { label: alt.height.clone(), min_m: alt.min_m, max_m: alt.max_m },
            coverage_scenario: app.scenario,
            uplink_rate_bps: rate.uplink_bps,
            downlink_rate_bps: app.control_downlink.then_some(self.control_downlink.min_bps),
            e2e_latency_ms: lat.e2e_ms,
            network_latency_ms: lat.network_ms,
            positioning_accuracy_m: pos.accuracy_m,
            data_rate_level: rate.level,
            latency_level: lat.level,
            positioning_level: pos.level,
        })
    }

    pub fn lookup(&self, application: &str) -> Result<RequirementProfile> {
        match self.applications.iter().find(|a| a.name == application) {
            Some(app) => self.profile(app),
            None => Err(Error::UnknownApplication {
                name: application.to_string(),
                known: self.application_names().join(", "),
            }),
        }
    }

    /// All 5G rate entries for a carrier and cell radius; more than one when
    /// the table lists several antenna configurations.
    pub fn expected_5g_rates(&self, fc_ghz: f64, cell_radius_m: f64) -> Result<Vec<Rate5gEntry>> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        let hits: Vec<_> = self
            .rates_5g
            .iter()
            .filter(|r| close(r.fc_ghz, fc_ghz) && close(r.cell_radius_m, cell_radius_m))
            .cloned()
            .collect();
        if hits.is_empty() {
            let mut rows: Vec<String> =
                self.rates_5g.iter().map(|r| format!("{} GHz / {} m", r.fc_ghz, r.cell_radius_m)).collect();
            rows.dedup();
            return Err(Error::NoRateEntry { fc_ghz, radius_m: cell_radius_m, available: rows.join(", ") });
        }
        Ok(hits)
    }
}

pub fn lookup_requirements(application: &str) -> Result<RequirementProfile> {
    Registry::builtin().lookup(application)
}

pub fn expected_5g_rates(fc_ghz: f64, cell_radius_m: f64) -> Result<Vec<Rate5gEntry>> {
    Registry::builtin().expected_5g_rates(fc_ghz, cell_radius_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KpiSource {
    Simulated,
    #[default]
    FieldLog,
}

/// An observed value. In JSON either a bare number (read as a field-log
/// value) or `{"value": .., "source": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "KpiRepr")]
pub struct Kpi {
    pub value: f64,
    pub source: KpiSource,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum KpiRepr {
    Bare(f64),
    Full {
        value: f64,
        #[serde(default)]
        source: KpiSource,
    },
}

impl From<KpiRepr> for Kpi {
    fn from(r: KpiRepr) -> Self {
        match r {
            KpiRepr::Bare(value) => Kpi { value, source: KpiSource::FieldLog },
            KpiRepr::Full { value, source } => Kpi { value, source },
        }
    }
}

impl Kpi {
    pub fn new(value: f64, source: KpiSource) -> Self {
        Self { value, source }
    }
}

/// Observed KPIs; every field is optional.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KpiReport {
    pub uplink_rate_bps: Option<Kpi>,
    pub downlink_rate_bps: Option<Kpi>,
    pub e2e_latency_ms: Option<Kpi>,
    pub network_latency_ms: Option<Kpi>,
    pub positioning_accuracy_m: Option<Kpi>,
    pub max_reliable_height_m: Option<Kpi>,
}

impl KpiReport {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("uplink_rate_bps", self.uplink_rate_bps),
            ("downlink_rate_bps", self.downlink_rate_bps),
            ("e2e_latency_ms", self.e2e_latency_ms),
            ("network_latency_ms", self.network_latency_ms),
            ("positioning_accuracy_m", self.positioning_accuracy_m),
            ("max_reliable_height_m", self.max_reliable_height_m),
        ];
        for (name, kpi) in fields {
            if let Some(k) = kpi {
                if !(k.value.is_finite() && k.value >= 0.0) {
                    return Err(Error::invalid(name, format!("must be finite and >= 0, got {}", k.value)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Altitude,
    UplinkRate,
    DownlinkRate,
    E2eLatency,
    NetworkLatency,
    Positioning,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Altitude => "altitude",
            Dimension::UplinkRate => "uplink_rate",
            Dimension::DownlinkRate => "downlink_rate",
            Dimension::E2eLatency => "e2e_latency",
            Dimension::NetworkLatency => "network_latency",
            Dimension::Positioning => "positioning",
        }
    }

    fn unit(self) -> &'static str {
        match self {
            Dimension::Altitude | Dimension::Positioning => "m",
            Dimension::UplinkRate | Dimension::DownlinkRate => "bps",
            Dimension::E2eLatency | Dimension::NetworkLatency => "ms",
        }
    }

    /// Larger observed values are better.
    fn higher_is_better(self) -> bool {
        matches!(self, Dimension::Altitude | Dimension::UplinkRate | Dimension::DownlinkRate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    PassWithGaps,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::PassWithGaps => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::PassWithGaps => "pass-with-gaps",
        }
    }

    /// The more severe of two verdicts.
    pub fn worst(self, other: Verdict) -> Verdict {
        let rank = |v: Verdict| match v {
            Verdict::Pass => 0,
            Verdict::PassWithGaps => 1,
            Verdict::Fail => 2,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionResult {
    pub dimension: Dimension,
    pub required: f64,
    pub observed: Option<f64>,
    pub source: Option<KpiSource>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub application: String,
    pub dimensions: Vec<DimensionResult>,
    pub verdict: Verdict,
}

impl ComplianceReport {
    pub fn status(&self, dimension: Dimension) -> Option<Status> {
        self.dimensions.iter().find(|d| d.dimension == dimension).map(|d| d.status)
    }
}

impl fmt::Display for ComplianceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "application: {}", self.application)?;
        for d in &self.dimensions {
            let cmp = if d.dimension.higher_is_better() { ">=" } else { "<=" };
            let observed = d.observed.map_or_else(|| "-".to_string(), |v| format!("{v}"));
            let status = match d.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Unknown => "UNKNOWN",
            };
            writeln!(
                f,
                "  {:<16} {:<8} observed {} {}, required {} {}",
                d.dimension.as_str(),
                status,
                observed,
                d.dimension.unit(),
                cmp,
                d.required
            )?;
        }
        write!(f, "verdict: {}", self.verdict.as_str())
    }
}

pub fn gate(kpis: &KpiReport, profile: &RequirementProfile) -> ComplianceReport {
    let mut checks = vec![(Dimension::Altitude, profile.altitude_band.max_m, kpis.max_reliable_height_m)];
    checks.push((Dimension::UplinkRate, profile.uplink_rate_bps, kpis.uplink_rate_bps));
    if let Some(dl) = profile.downlink_rate_bps {
        checks.push((Dimension::DownlinkRate, dl, kpis.downlink_rate_bps));
    }
    checks.push((Dimension::E2eLatency, profile.e2e_latency_ms, kpis.e2e_latency_ms));
    checks.push((Dimension::NetworkLatency, profile.network_latency_ms, kpis.network_latency_ms));
    checks.push((Dimension::Positioning, profile.positioning_accuracy_m, kpis.positioning_accuracy_m));

    let dimensions: Vec<DimensionResult> = checks
        .into_iter()
        .map(|(dimension, required, kpi)| {
            let status = match kpi {
                None => Status::Unknown,
                Some(k) if dimension.higher_is_better() && k.value >= required => Status::Pass,
                Some(k) if !dimension.higher_is_better() && k.value <= required => Status::Pass,
                Some(_) => Status::Fail,
            };
            DimensionResult { dimension, required, observed: kpi.map(|k| k.value), source: kpi.map(|k| k.source), status }
        })
        .collect();

    let verdict = if dimensions.iter().any(|d| d.status == Status::Fail) {
        Verdict::Fail
    } else if dimensions.iter().any(|d| d.status == Status::Unknown) {
        Verdict::PassWithGaps
    } else {
        Verdict::Pass
    };
    ComplianceReport { application: profile.application.clone(), dimensions, verdict }
}
