//! Cellular radio simulation and drone-UE detection toolkit.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`deployment`]: hexagonal multi-site layouts and UE drops (indoor, outdoor, aerial)
//! - [`radio`]: LOS probability, pathloss, sector antenna pattern, RSRP / RSSI / SINR
//! - [`features`]: the two-feature representation (RSSI, std-dev of the eight strongest RSRPs)
//! - [`ml`]: logistic regression and CART decision tree classifiers, metrics, probability grids
//! - [`requirements`]: connectivity requirement levels per drone application and compliance gating
//! - [`linkrate`]: truncated-Shannon link abstraction and analytic peak-rate estimator
//! - [`fieldtrial`]: measurement log ingestion, per-height summaries and gating
//!
//! All randomness flows from a single master seed through [`seed::derive`], so
//! results never depend on evaluation order or thread count.

pub mod deployment;
pub mod error;
pub mod features;
pub mod fieldtrial;
pub mod linkrate;
pub mod ml;
pub mod radio;
pub mod requirements;
pub mod seed;

pub use deployment::{build_hex_layout, place_ues, Cell, CellTemplate, NetworkLayout, PlacementSpec, UeClass, UeDrop};
pub use error::{Error, Result};
pub use features::{extract_features, generate_dataset, standardize, Dataset, FeatureVector, Label, LabeledSample, Standardization};
pub use ml::{Metrics, Model, ProbabilityGrid};
pub use radio::{compute_sample, ChannelParams, PerCellMeasurement, RadioSample};
pub use requirements::{gate, ComplianceReport, KpiReport, Registry, RequirementProfile, Verdict};
