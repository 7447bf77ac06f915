//! Binary logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVector, Label, Standardization, N_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the largest gradient component falls below this.
    pub tolerance: f64,
    /// Coefficient of the `l2 * |w|^2 / 2` penalty (bias excluded).
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, max_iters: 5000, tolerance: 1e-6, l2: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: [f64; N_FEATURES],
    pub bias: f64,
    /// Applied to raw features before the linear score.
    pub standardization: Standardization,
    pub config: LogisticConfig,
    pub iterations: usize,
}

/// Parameters laid out as `[w_0, .., w_{n-1}, b]`.
pub type Params = [f64; N_FEATURES + 1];

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn score(p: &Params, x: &[f64; N_FEATURES]) -> f64 {
    x.iter().zip(p).map(|(xi, wi)| xi * wi).sum::<f64>() + p[N_FEATURES]
}

/// Mean negative log-likelihood plus `l2 * |w|^2 / 2`, and its gradient.
pub fn loss_and_gradient(p: &Params, xs: &[[f64; N_FEATURES]], ys: &[f64], l2: f64) -> (f64, Params) {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut grad = [0.0; N_FEATURES + 1];
    for (x, &y) in xs.iter().zip(ys) {
        let z = score(p, x);
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for j in 0..N_FEATURES {
            grad[j] += r * x[j];
        }
        grad[N_FEATURES] += r;
    }
    let w_sq: f64 = p[..N_FEATURES].iter().map(|w| w * w).sum();
    let loss = loss / n + 0.5 * l2 * w_sq;
    for j in 0..=N_FEATURES {
        grad[j] /= n;
        if j < N_FEATURES {
            grad[j] += l2 * p[j];
        }
    }
    (loss, grad)
}

pub(crate) fn design(data: &Dataset) -> (Vec<[f64; N_FEATURES]>, Vec<f64>) {
    data.samples
        .iter()
        .map(|s| (s.features.to_array(), if s.label.is_drone() { 1.0 } else { 0.0 }))
        .unzip()
}

pub(crate) fn check_both_classes(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.count(Label::Drone) == 0 {
        return Err(Error::SingleClass("terrestrial"));
    }
    if data.count(Label::Terrestrial) == 0 {
        return Err(Error::SingleClass("drone"));
    }
    Ok(())
}

pub fn train_logistic(train: &Dataset, config: &LogisticConfig) -> Result<LogisticModel> {
    train_logistic_traced(train, config).map(|(m, _)| m)
}

/// Train and return the loss after every update (index 0 is the initial loss).
pub fn train_logistic_traced(train: &Dataset, config: &LogisticConfig) -> Result<(LogisticModel, Vec<f64>)> {
    let standardization = train.standardization.ok_or(Error::NotStandardized)?;
    check_both_classes(train)?;
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::invalid("learning_rate", format!("must be positive, got {}", config.learning_rate)));
    }
    if !(config.l2 >= 0.0) {
        return Err(Error::invalid("l2", "must be >= 0"));
    }

    let (xs, ys) = design(train);
    let mut p: Params = [0.0; N_FEATURES + 1];
    let (mut loss, mut grad) = loss_and_gradient(&p, &xs, &ys, config.l2);
    let mut trace = vec![loss];
    let mut iterations = 0;
    while iterations < config.max_iters {
        if grad.iter().all(|g| g.abs() < config.tolerance) {
            break;
        }
        for j in 0..=N_FEATURES {
            p[j] -= config.learning_rate * grad[j];
        }
        (loss, grad) = loss_and_gradient(&p, &xs, &ys, config.l2);
        if !loss.is_finite() {
            return Err(Error::Diverged { learning_rate: config.learning_rate });
        }
        trace.push(loss);
        iterations += 1;
    }

    let mut weights = [0.0; N_FEATURES];
    weights.copy_from_slice(&p[..N_FEATURES]);
    Ok((LogisticModel { weights, bias: p[N_FEATURES], standardization, config: *config, iterations }, trace))
}

impl LogisticModel {
    /// Probability from already standardized features.
    pub fn predict_standardized(&self, z: &[f64; N_FEATURES]) -> f64 {
        let mut p = [0.0; N_FEATURES + 1];
        p[..N_FEATURES].copy_from_slice(&self.weights);
        p[N_FEATURES] = self.bias;
        sigmoid(score(&p, z))
    }
}

pub fn predict_proba_logistic(model: &LogisticModel, features: &FeatureVector) -> Result<f64> {
    if !features.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    Ok(model.predict_standardized(&model.standardization.apply(features).to_array()))
}
