//! Two-feature representation of a radio sample and labeled datasets.
//!
//! A UE is described by its RSSI and by the population standard deviation of
//! its eight strongest per-cell RSRPs (fewer when the layout has fewer cells,
//! but never less than two). Indoor and outdoor UEs are `Terrestrial`, aerial
//! UEs are `Drone`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::deployment::{place_ues, NetworkLayout, PlacementSpec, UeClass};
use crate::error::{Error, Result};
use crate::radio::{compute_samples, ChannelParams, RadioSample};
use crate::seed;

pub const N_FEATURES: usize = 2;
pub const FEATURE_NAMES: [&str; N_FEATURES] = ["rssi_dbm", "rsrp_std_db"];
pub const STRONGEST_CELLS: usize = 8;

/// Width of the height strata used by [`stratified_split`].
pub const SPLIT_HEIGHT_BIN_M: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub rssi_dbm: f64,
    pub rsrp_std_db: f64,
}

impl FeatureVector {
    pub fn new(rssi_dbm: f64, rsrp_std_db: f64) -> Self {
        Self { rssi_dbm, rsrp_std_db }
    }

    pub fn to_array(self) -> [f64; N_FEATURES] {
        [self.rssi_dbm, self.rsrp_std_db]
    }

    pub fn from_array(a: [f64; N_FEATURES]) -> Self {
        Self { rssi_dbm: a[0], rsrp_std_db: a[1] }
    }

    pub fn is_finite(&self) -> bool {
        self.rssi_dbm.is_finite() && self.rsrp_std_db.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Terrestrial,
    Drone,
}

impl Label {
    pub fn of(class: UeClass) -> Self {
        if class == UeClass::Aerial {
            Label::Drone
        } else {
            Label::Terrestrial
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Drone => "drone",
            Label::Terrestrial => "terrestrial",
        }
    }

    pub fn is_drone(self) -> bool {
        self == Label::Drone
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub drop_index: usize,
    pub features: FeatureVector,
    pub label: Label,
    pub height_m: f64,
    pub ue_class: UeClass,
}

/// Per-feature z-score parameters (population statistics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: [f64; N_FEATURES],
    pub std: [f64; N_FEATURES],
}

impl Standardization {
    pub fn apply(&self, f: &FeatureVector) -> FeatureVector {
        let x = f.to_array();
        FeatureVector::from_array(std::array::from_fn(|j| (x[j] - self.mean[j]) / self.std[j]))
    }

    pub fn invert(&self, z: &FeatureVector) -> FeatureVector {
        let z = z.to_array();
        FeatureVector::from_array(std::array::from_fn(|j| z[j] * self.std[j] + self.mean[j]))
    }

    /// Standardize a raw dataset with these parameters.
    pub fn apply_dataset(&self, raw: &Dataset) -> Dataset {
        Dataset {
            samples: raw.samples.iter().map(|s| LabeledSample { features: self.apply(&s.features), ..*s }).collect(),
            standardization: Some(*self),
        }
    }

    /// Recover the raw dataset.
    pub fn invert_dataset(&self, standardized: &Dataset) -> Dataset {
        Dataset {
            samples: standardized
                .samples
                .iter()
                .map(|s| LabeledSample { features: self.invert(&s.features), ..*s })
                .collect(),
            standardization: None,
        }
    }
}

/// Labeled samples. When `standardization` is set the features are z-scores
/// under those parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>) -> Self {
        Self { samples, standardization: None }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    pub fn filter(&self, mut keep: impl FnMut(&LabeledSample) -> bool) -> Dataset {
        Dataset {
            samples: self.samples.iter().filter(|s| keep(s)).copied().collect(),
            standardization: self.standardization,
        }
    }

    /// Mean feature vector of the samples selected by `keep`, if any.
    pub fn centroid(&self, mut keep: impl FnMut(&LabeledSample) -> bool) -> Option<[f64; N_FEATURES]> {
        let mut sum = [0.0; N_FEATURES];
        let mut n = 0usize;
        for s in self.samples.iter().filter(|s| keep(s)) {
            let x = s.features.to_array();
            for j in 0..N_FEATURES {
                sum[j] += x[j];
            }
            n += 1;
        }
        (n > 0).then(|| sum.map(|v| v / n as f64))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(DATASET_HEADER)?;
        for s in &self.samples {
            out.write_record([
                s.drop_index.to_string(),
                s.ue_class.to_string(),
                s.height_m.to_string(),
                s.features.rssi_dbm.to_string(),
                s.features.rsrp_std_db.to_string(),
                s.label.as_str().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Read a dataset CSV. `origin` is only used in error messages.
    pub fn read_csv<R: Read>(r: R, origin: &Path) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rdr.headers()?.clone();
        if header.iter().ne(DATASET_HEADER) {
            return Err(Error::Header {
                path: origin.to_path_buf(),
                reason: format!("expected `{}`, got `{}`", DATASET_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let err = |col: usize, reason: String| Error::Parse {
                path: origin.to_path_buf(),
                line,
                column: DATASET_HEADER[col].to_string(),
                reason,
            };
            let num = |col: usize| -> Result<f64> {
                let v: f64 = rec[col].trim().parse().map_err(|e| err(col, format!("`{}`: {e}", &rec[col])))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(err(col, "not finite".into()))
                }
            };
            let drop_index = rec[0].trim().parse().map_err(|e| err(0, format!("`{}`: {e}", &rec[0])))?;
            let ue_class = UeClass::parse(rec[1].trim()).ok_or_else(|| err(1, format!("unknown class `{}`", &rec[1])))?;
            let height_m = num(2)?;
            let features = FeatureVector::new(num(3)?, num(4)?);
            if features.rsrp_std_db < 0.0 {
                return Err(err(4, "must be >= 0".into()));
            }
            let label = match rec[5].trim() {
                "drone" => Label::Drone,
                "terrestrial" => Label::Terrestrial,
                other => return Err(err(5, format!("unknown label `{other}`"))),
            };
            if label != Label::of(ue_class) {
                return Err(err(5, format!("label `{}` inconsistent with class `{ue_class}`", label.as_str())));
            }
            samples.push(LabeledSample { drop_index, features, label, height_m, ue_class });
        }
        Ok(Dataset::new(samples))
    }
}

pub const DATASET_HEADER: [&str; 6] = ["drop_index", "ue_class", "height_m", "rssi_dbm", "rsrp_std_db", "label"];

pub fn extract_features(sample: &RadioSample) -> Result<FeatureVector> {
    if sample.cells.len() < 2 {
        return Err(Error::TooFewCells(sample.cells.len()));
    }
    let mut rsrp: Vec<f64> = sample.cells.iter().map(|c| c.rsrp_dbm).collect();
    rsrp.sort_by(|a, b| b.total_cmp(a));
    rsrp.truncate(STRONGEST_CELLS);
    let n = rsrp.len() as f64;
    let mean = rsrp.iter().sum::<f64>() / n;
    let var = rsrp.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(FeatureVector::new(sample.rssi_dbm, var.sqrt()))
}

pub fn label_sample(sample: &RadioSample) -> Result<LabeledSample> {
    Ok(LabeledSample {
        drop_index: sample.drop.drop_index,
        features: extract_features(sample)?,
        label: Label::of(sample.drop.ue_class),
        height_m: sample.drop.height_m(),
        ue_class: sample.drop.ue_class,
    })
}

/// Place UEs, compute their radio samples and label them. Returns the radio
/// samples alongside the dataset.
pub fn simulate(
    layout: &NetworkLayout,
    spec: &PlacementSpec,
    params: &ChannelParams,
    seed: u64,
) -> Result<(Vec<RadioSample>, Dataset)> {
    let drops = place_ues(layout, spec, seed)?;
    let samples = compute_samples(layout, &drops, params, seed)?;
    let labeled = samples.iter().map(label_sample).collect::<Result<Vec<_>>>()?;
    Ok((samples, Dataset::new(labeled)))
}

pub fn generate_dataset(layout: &NetworkLayout, spec: &PlacementSpec, params: &ChannelParams, seed: u64) -> Result<Dataset> {
    simulate(layout, spec, params, seed).map(|(_, d)| d)
}

/// Fit z-score parameters on `train` and return the standardized copy.
pub fn standardize(train: &Dataset) -> Result<(Dataset, Standardization)> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = train.len() as f64;
    let mut mean = [0.0; N_FEATURES];
    for s in &train.samples {
        let x = s.features.to_array();
        for j in 0..N_FEATURES {
            mean[j] += x[j] / n;
        }
    }
    let mut std = [0.0; N_FEATURES];
    for s in &train.samples {
        let x = s.features.to_array();
        for j in 0..N_FEATURES {
            std[j] += (x[j] - mean[j]).powi(2) / n;
        }
    }
    let std = std.map(f64::sqrt);
    for j in 0..N_FEATURES {
        if !(std[j] > 1e-12 * mean[j].abs().max(1.0)) {
            return Err(Error::DegenerateFeature(FEATURE_NAMES[j]));
        }
    }
    let params = Standardization { mean, std };
    Ok((params.apply_dataset(train), params))
}

/// Seeded split, stratified by label and height bin. Every stratum sends
/// `round(train_fraction * n)` samples to the training side; both sides keep
/// the input order.
pub fn stratified_split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::invalid("train_fraction", format!("must lie in [0, 1], got {train_fraction}")));
    }
    let mut strata: BTreeMap<(Label, i64), Vec<usize>> = BTreeMap::new();
    for (i, s) in data.samples.iter().enumerate() {
        let bin = (s.height_m / SPLIT_HEIGHT_BIN_M).floor() as i64;
        strata.entry((s.label, bin)).or_default().push(i);
    }
    let mut in_train = vec![false; data.len()];
    for (ordinal, idx) in strata.values_mut().enumerate() {
        let mut rng = seed::rng(seed, "split", &[ordinal as u64]);
        idx.shuffle(&mut rng);
        let k = (train_fraction * idx.len() as f64).round() as usize;
        for &i in &idx[..k] {
            in_train[i] = true;
        }
    }
    let pick = |want: bool| Dataset {
        samples: data.samples.iter().zip(&in_train).filter(|(_, &t)| t == want).map(|(s, _)| *s).collect(),
        standardization: data.standardization,
    };
    Ok((pick(true), pick(false)))
}

/// Euclidean distance between two centroids.
pub fn centroid_distance(a: [f64; N_FEATURES], b: [f64; N_FEATURES]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
