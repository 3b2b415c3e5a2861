//! Class-weighted, L2-regularized logistic regression.
//!
//! Minimizes
//! `-(1/N) * sum_i w_{y_i} [y_i log s(z_i) + (1 - y_i) log(1 - s(z_i))] + (l2/2) |beta|^2`
//! (intercept unregularized) by full-batch gradient descent with Armijo
//! backtracking.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::resample::ClassWeights;
use crate::rng::rng_from_seed;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearInit {
    Zero,
    /// Coefficients and intercept drawn uniformly from `[-scale, scale]`.
    Random {
        seed: u64,
        scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub max_iter: usize,
    pub l2: f64,
    pub tolerance: f64,
    pub init: LinearInit,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            max_iter: 100,
            l2: 1e-4,
            tolerance: 1e-6,
            init: LinearInit::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub final_grad_norm: f64,
}

/// Loss value and gradient of the weighted objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub loss: f64,
    pub grad_coefficients: Vec<f64>,
    pub grad_intercept: f64,
}

impl Objective {
    pub fn grad_norm(&self) -> f64 {
        (self.grad_coefficients.iter().map(|g| g * g).sum::<f64>()
            + self.grad_intercept * self.grad_intercept)
            .sqrt()
    }
}

fn loss_only(
    x: &Matrix,
    y: &[u8],
    weights: &ClassWeights,
    l2: f64,
    coef: &[f64],
    intercept: f64,
) -> f64 {
    let mut total = 0.0;
    for (row, &label) in x.rows_iter().zip(y) {
        let z = dot(row, coef) + intercept;
        // -log s(z) = softplus(-z); -log(1 - s(z)) = softplus(z)
        let nll = if label == 1 {
            softplus(-z)
        } else {
            softplus(z)
        };
        total += weights.of(label) * nll;
    }
    total / y.len() as f64 + 0.5 * l2 * dot(coef, coef)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub fn logistic_objective(
    x: &Matrix,
    y: &[u8],
    weights: &ClassWeights,
    l2: f64,
    coef: &[f64],
    intercept: f64,
) -> Objective {
    let n = y.len() as f64;
    let mut grad = vec![0.0; coef.len()];
    let mut grad_b = 0.0;
    let mut total = 0.0;
    for (row, &label) in x.rows_iter().zip(y) {
        let z = dot(row, coef) + intercept;
        let w = weights.of(label);
        total += w * if label == 1 {
            softplus(-z)
        } else {
            softplus(z)
        };
        let r = w * (sigmoid(z) - f64::from(label));
        grad_b += r;
        for (g, v) in grad.iter_mut().zip(row) {
            *g += r * v;
        }
    }
    for (g, c) in grad.iter_mut().zip(coef) {
        *g = *g / n + l2 * c;
    }
    Objective {
        loss: total / n + 0.5 * l2 * dot(coef, coef),
        grad_coefficients: grad,
        grad_intercept: grad_b / n,
    }
}

fn validate(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            what: "feature rows vs labels",
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("features"));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

pub fn train_logistic(
    x: &Matrix,
    y: &[u8],
    weights: &ClassWeights,
    config: &LogisticConfig,
) -> Result<LinearModel> {
    train_logistic_traced(x, y, weights, config).map(|(m, _)| m)
}

/// Like [`train_logistic`], also returning the loss after every iteration
/// (first entry is the initial loss).
pub fn train_logistic_traced(
    x: &Matrix,
    y: &[u8],
    weights: &ClassWeights,
    config: &LogisticConfig,
) -> Result<(LinearModel, Vec<f64>)> {
    validate(x, y)?;
    if config.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    if config.l2.is_nan() || config.l2 < 0.0 || config.tolerance.is_nan() || config.tolerance <= 0.0
    {
        return Err(Error::InvalidParameter(
            "l2 must be >= 0 and tolerance > 0".into(),
        ));
    }
    let d = x.n_cols();
    let (mut coef, mut b) = match config.init {
        LinearInit::Zero => (vec![0.0; d], 0.0),
        LinearInit::Random { seed, scale } => {
            let mut rng = rng_from_seed(seed);
            let c = (0..d).map(|_| rng.random_range(-scale..=scale)).collect();
            (c, rng.random_range(-scale..=scale))
        }
    };
    let mut obj = logistic_objective(x, y, weights, config.l2, &coef, b);
    let mut history = vec![obj.loss];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut trial = vec![0.0; d];
    while iterations < config.max_iter {
        let gnorm2 = obj.grad_norm().powi(2);
        if gnorm2.sqrt() < config.tolerance {
            break;
        }
        iterations += 1;
        step *= 2.0;
        let accepted = loop {
            for ((t, c), g) in trial.iter_mut().zip(&coef).zip(&obj.grad_coefficients) {
                *t = c - step * g;
            }
            let tb = b - step * obj.grad_intercept;
            let l = loss_only(x, y, weights, config.l2, &trial, tb);
            if l <= obj.loss - 0.5 * step * gnorm2 {
                break Some(tb);
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some(tb) = accepted else { break };
        std::mem::swap(&mut coef, &mut trial);
        b = tb;
        obj = logistic_objective(x, y, weights, config.l2, &coef, b);
        if !obj.loss.is_finite() {
            return Err(Error::Diverged(format!(
                "logistic loss became non-finite at iteration {iterations}"
            )));
        }
        history.push(obj.loss);
    }
    Ok((
        LinearModel {
            coefficients: coef,
            intercept: b,
            iterations,
            final_grad_norm: obj.grad_norm(),
        },
        history,
    ))
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.coefficients.len() {
            return Err(Error::WidthMismatch {
                expected: self.coefficients.len(),
                found: x.n_cols(),
            });
        }
        Ok(x.rows_iter()
            .map(|r| sigmoid(dot(r, &self.coefficients) + self.intercept))
            .collect())
    }
}
