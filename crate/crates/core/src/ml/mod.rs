//! Drone-UE classifiers over the two-feature representation.
//!
//! Both model kinds take raw (unstandardized) feature vectors at prediction
//! time; each carries the standardization it was trained under. The positive
//! class is `Drone`, and every threshold comparison uses `>=`.

mod logistic;
pub mod oracle;
mod tree;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVector, Standardization};

pub use logistic::{
    loss_and_gradient, predict_proba_logistic, sigmoid, train_logistic, train_logistic_traced, LogisticConfig,
    LogisticModel, Params,
};
pub use tree::{predict_proba_tree, train_tree, TreeConfig, TreeModel, TreeNode};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Logistic(LogisticModel),
    Tree(TreeModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Logistic(_) => "logistic",
            Model::Tree(_) => "tree",
        }
    }

    pub fn predict_proba(&self, features: &FeatureVector) -> Result<f64> {
        match self {
            Model::Logistic(m) => predict_proba_logistic(m, features),
            Model::Tree(m) => predict_proba_tree(m, features),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = match self {
            Model::Logistic(m) => ModelFile {
                kind: "logistic".into(),
                format_version: MODEL_FORMAT_VERSION,
                standardization: Some(m.standardization),
                parameters: serde_json::to_value(LogisticParameters {
                    weights: m.weights,
                    bias: m.bias,
                    iterations: m.iterations,
                })?,
                config: serde_json::to_value(m.config)?,
            },
            Model::Tree(m) => ModelFile {
                kind: "tree".into(),
                format_version: MODEL_FORMAT_VERSION,
                standardization: m.standardization,
                parameters: serde_json::to_value(TreeParameters { nodes: m.nodes.clone() })?,
                config: serde_json::to_value(m.config)?,
            },
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion { found: file.format_version, expected: MODEL_FORMAT_VERSION });
        }
        match file.kind.as_str() {
            "logistic" => {
                let p: LogisticParameters = serde_json::from_value(file.parameters)?;
                let standardization = file
                    .standardization
                    .ok_or_else(|| Error::MalformedModel("logistic model without standardization".into()))?;
                if standardization.std.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::MalformedModel("standardization std must be positive".into()));
                }
                Ok(Model::Logistic(LogisticModel {
                    weights: p.weights,
                    bias: p.bias,
                    standardization,
                    config: serde_json::from_value(file.config)?,
                    iterations: p.iterations,
                }))
            }
            "tree" => {
                let p: TreeParameters = serde_json::from_value(file.parameters)?;
                let m = TreeModel {
                    nodes: p.nodes,
                    config: serde_json::from_value(file.config)?,
                    standardization: file.standardization,
                };
                m.validate()?;
                Ok(Model::Tree(m))
            }
            other => Err(Error::MalformedModel(format!("unknown model type `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(rename = "type")]
    kind: String,
    format_version: u32,
    standardization: Option<Standardization>,
    parameters: serde_json::Value,
    config: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogisticParameters {
    weights: [f64; 2],
    bias: f64,
    iterations: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeParameters {
    nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// `tp / (tp + fp)`, 0 when nothing was predicted positive.
    pub precision: f64,
    /// `tp / (tp + fn)`, 0 when there are no positives.
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            tp,
            fp,
            tn,
            fn_,
        }
    }
}

/// Confusion counts with `Drone` predicted iff probability `>= threshold`.
pub fn evaluate(model: &Model, test: &Dataset, threshold: f64) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for s in &test.samples {
        let predicted = model.predict_proba(&s.features)? >= threshold;
        match (predicted, s.label.is_drone()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, tn, fn_))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::invalid(name, format!("needs at least 2 steps, got {}", self.steps)));
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::invalid(name, format!("degenerate bounds [{}, {}]", self.min, self.max)));
        }
        Ok(())
    }
}

/// Drone probability over a rectangle of raw feature space. Row-major with
/// RSSI along rows and RSRP STD along columns: `values[iy * steps_x + ix]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityGrid {
    pub rsrp_std: GridAxis,
    pub rssi: GridAxis,
    pub values: Vec<f64>,
}

impl ProbabilityGrid {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.rsrp_std.steps + ix]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rsrp_std_db", "rssi_dbm", "probability"])?;
        for iy in 0..self.rssi.steps {
            for ix in 0..self.rsrp_std.steps {
                out.write_record([
                    self.rsrp_std.value(ix).to_string(),
                    self.rssi.value(iy).to_string(),
                    self.at(ix, iy).to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

pub fn probability_grid(model: &Model, rsrp_std: GridAxis, rssi: GridAxis) -> Result<ProbabilityGrid> {
    rsrp_std.validate("rsrp_std")?;
    rssi.validate("rssi")?;
    let mut values = Vec::with_capacity(rsrp_std.steps * rssi.steps);
    for iy in 0..rssi.steps {
        for ix in 0..rsrp_std.steps {
            values.push(model.predict_proba(&FeatureVector::new(rssi.value(iy), rsrp_std.value(ix)))?);
        }
    }
    Ok(ProbabilityGrid { rsrp_std, rssi, values })
}
