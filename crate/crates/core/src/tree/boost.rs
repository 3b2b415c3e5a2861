//! Newton boosting on the logistic loss.
//!
//! Round `t`: `p = s(F)`, `g = (p - y) * m`, `h = p (1 - p) * m` with
//! `m = scale_pos_weight` on positives and 1 on negatives. A regression tree
//! is grown on the gain `1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)]`,
//! leaves get `-G / (H + l)`, and `F += learning_rate * tree(x)`.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::grow::{grow, GrowConfig, Presorted, SplitObjective, Tree};
use super::{check_training_input, check_width};
use crate::error::{Error, Result};
use crate::linear::{sigmoid, softplus};
use crate::matrix::Matrix;
use crate::rng::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub n_estimators: usize,
    /// 0 grows single-leaf trees.
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub scale_pos_weight: f64,
    pub reg_lambda: f64,
    /// Minimum hessian mass per child.
    pub min_child_weight: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_estimators: 100,
            max_depth: 6,
            learning_rate: 0.3,
            subsample: 1.0,
            scale_pos_weight: 1.0,
            reg_lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

impl BoostParams {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be >= 0");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must lie in (0, 1]");
        }
        if !(self.scale_pos_weight > 0.0 && self.scale_pos_weight.is_finite()) {
            return bad("scale_pos_weight must be positive");
        }
        if [self.reg_lambda, self.min_child_weight]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return bad("reg_lambda and min_child_weight must be >= 0");
        }
        Ok(())
    }
}

struct NewtonGain {
    lambda: f64,
    min_child_weight: f64,
}

impl SplitObjective for NewtonGain {
    fn score(&self, g: f64, h: f64) -> f64 {
        let d = h + self.lambda;
        if d > 0.0 {
            0.5 * g * g / d
        } else {
            0.0
        }
    }

    fn child_allowed(&self, count: usize, _g: f64, h: f64) -> bool {
        count >= 1 && h >= self.min_child_weight
    }

    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        let d = h + self.lambda;
        if d > 0.0 {
            -g / d
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub n_features: usize,
    /// Regression trees; leaf values are raw (unshrunk) weights.
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    pub base_score_logit: f64,
    pub reg_lambda: f64,
    pub scale_pos_weight: f64,
}

pub fn train_boosted(
    x: &Matrix,
    y: &[u8],
    params: &BoostParams,
    seed: u64,
) -> Result<BoostedModel> {
    train_boosted_traced(x, y, params, seed).map(|(m, _)| m)
}

/// Also returns the mean `m`-weighted logistic loss before the first round
/// and after every round.
pub fn train_boosted_traced(
    x: &Matrix,
    y: &[u8],
    params: &BoostParams,
    seed: u64,
) -> Result<(BoostedModel, Vec<f64>)> {
    check_training_input(x, y)?;
    params.validate()?;
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    let n = x.n_rows();
    let multiplier: Vec<f64> = y
        .iter()
        .map(|&v| if v == 1 { params.scale_pos_weight } else { 1.0 })
        .collect();
    let loss = |f: &[f64]| {
        f.iter()
            .zip(y)
            .zip(&multiplier)
            .map(|((&z, &l), &m)| m * if l == 1 { softplus(-z) } else { softplus(z) })
            .sum::<f64>()
            / n as f64
    };
    let presorted = Presorted::new(x);
    let config = GrowConfig {
        max_depth: Some(params.max_depth),
        min_samples_split: 2,
        max_features: x.n_cols(),
    };
    let objective = NewtonGain {
        lambda: params.reg_lambda,
        min_child_weight: params.min_child_weight,
    };
    let base = 0.0;
    let mut logits = vec![base; n];
    let mut history = vec![loss(&logits)];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut stats = vec![[0.0; 2]; n];
    for round in 0..params.n_estimators {
        for i in 0..n {
            let p = sigmoid(logits[i]);
            let m = multiplier[i];
            stats[i] = [(p - f64::from(y[i])) * m, p * (1.0 - p) * m];
        }
        let mut rng = derived_rng(seed, &[round as u64]);
        let counts = (params.subsample < 1.0).then(|| {
            let k = ((params.subsample * n as f64).round() as usize).max(1);
            let mut c = vec![0u32; n];
            for i in sample(&mut rng, n, k) {
                c[i] = 1;
            }
            c
        });
        let tree = grow(
            &presorted,
            &stats,
            counts.as_deref(),
            &config,
            &objective,
            &mut rng,
        );
        for (i, f) in logits.iter_mut().enumerate() {
            *f += params.learning_rate * tree.predict_row(x.row(i));
        }
        if logits.iter().any(|f| !f.is_finite()) {
            return Err(Error::Diverged(format!(
                "non-finite logit after boosting round {round}"
            )));
        }
        history.push(loss(&logits));
        trees.push(tree);
    }
    Ok((
        BoostedModel {
            n_features: x.n_cols(),
            trees,
            learning_rate: params.learning_rate,
            base_score_logit: base,
            reg_lambda: params.reg_lambda,
            scale_pos_weight: params.scale_pos_weight,
        },
        history,
    ))
}

impl BoostedModel {
    pub fn logit_row(&self, row: &[f64]) -> f64 {
        self.base_score_logit
            + self.learning_rate * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_width(self.n_features, x)?;
        Ok(x.rows_iter().map(|r| sigmoid(self.logit_row(r))).collect())
    }
}
