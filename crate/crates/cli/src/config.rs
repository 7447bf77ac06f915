//! Experiment configuration file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dronecell_core::fieldtrial::{Band, MetricBands, SynthSpec};
use dronecell_core::ml::{GridAxis, LogisticConfig, TreeConfig};
use dronecell_core::{CellTemplate, ChannelParams, PlacementSpec};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub layout: LayoutConfig,
    pub channel: ChannelParams,
    pub placement: PlacementSpec,
    pub ml: MlConfig,
    pub grid: GridConfig,
    pub trial: TrialConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    pub rings: i64,
    pub isd_m: f64,
    pub cell: CellTemplate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlConfig {
    pub train_fraction: f64,
    pub threshold: f64,
    pub logistic: LogisticConfig,
    pub tree: TreeConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub rsrp_std: GridAxis,
    pub rssi: GridAxis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialConfig {
    /// Upper edges of the height bins `(0, h1], (h1, h2], ..`.
    pub bin_edges_m: Vec<f64>,
    pub bands: MetricBands,
    pub synth: SynthSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 1,
            output_dir: PathBuf::from("out"),
            layout: LayoutConfig::default(),
            channel: ChannelParams::default(),
            placement: PlacementSpec::default(),
            ml: MlConfig::default(),
            grid: GridConfig::default(),
            trial: TrialConfig::default(),
        }
    }
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self { rings: 2, isd_m: 500.0, cell: CellTemplate::default() }
    }
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            threshold: dronecell_core::ml::DEFAULT_THRESHOLD,
            logistic: LogisticConfig::default(),
            tree: TreeConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        // Covers the default-config feature ranges with some margin.
        Self { rsrp_std: GridAxis::new(0.0, 20.0, 81), rssi: GridAxis::new(-90.0, -10.0, 81) }
    }
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            bin_edges_m: vec![50.0, 100.0, 300.0],
            bands: MetricBands {
                rsrp_dbm: Some(Band::new(-90.0, -75.0)),
                sinr_db: Some(Band::new(-10.0, 5.0)),
                ul_rate_bps: Some(Band::new(4e6, 10e6)),
                latency_ms: None,
            },
            synth: SynthSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Parse and validate; errors name the offending field path.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("at `{path}`: {}", e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            bail!("at `schema_version`: unsupported version {}, expected {CONFIG_SCHEMA_VERSION}", self.schema_version);
        }
        if self.layout.rings < 0 {
            bail!("at `layout.rings`: must be >= 0, got {}", self.layout.rings);
        }
        if !(self.layout.isd_m > 0.0 && self.layout.isd_m.is_finite()) {
            bail!("at `layout.isd_m`: must be positive, got {}", self.layout.isd_m);
        }
        self.channel.validate().context("at `channel`")?;
        self.placement.validate().context("at `placement`")?;
        if !(0.0..=1.0).contains(&self.ml.train_fraction) {
            bail!("at `ml.train_fraction`: must lie in [0, 1], got {}", self.ml.train_fraction);
        }
        if !(0.0..=1.0).contains(&self.ml.threshold) {
            bail!("at `ml.threshold`: must lie in [0, 1], got {}", self.ml.threshold);
        }
        if self.trial.bin_edges_m.windows(2).any(|w| !(w[0] < w[1])) || self.trial.bin_edges_m.first().is_some_and(|&h| !(h > 0.0)) {
            bail!("at `trial.bin_edges_m`: edges must be positive and strictly increasing");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }
}
