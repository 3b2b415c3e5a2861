//! SMOTE oversampling and class-weight balancing.
//!
//! SMOTE works in the encoded feature space with Euclidean distance. Each
//! synthetic point picks a minority seed `q`, one of its `k` nearest
//! minority neighbours `x`, and emits `q + u * (x - q)` with `u ~ U[0, 1]`.
//! Every synthetic point draws from its own stream derived from
//! `(seed, synthetic index)`.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k: usize,
    /// Desired minority/majority ratio after resampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

/// Where a synthetic row came from: dataset row indices of the seed point and
/// the chosen neighbour, and the interpolation coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub base_row: usize,
    pub neighbor_row: usize,
    pub u: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    /// Training rows in `train_rows` order, then synthetic rows.
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub n_original: usize,
    pub minority_label: u8,
    pub origins: Vec<SyntheticOrigin>,
}

impl SmoteOutput {
    pub fn n_synthetic(&self) -> usize {
        self.origins.len()
    }
}

/// `q + u * (x - q)` coordinate-wise.
pub fn interpolate(q: &[f64], x: &[f64], u: f64) -> Vec<f64> {
    q.iter().zip(x).map(|(a, b)| a + u * (b - a)).collect()
}

/// Squared distance, or `None` once the running sum exceeds `bound`.
/// Terms are non-negative, so abandoning early never drops a point that
/// could tie or beat the bound.
fn sq_dist_within(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    let mut sum = 0.0;
    for (ca, cb) in a.chunks(8).zip(b.chunks(8)) {
        for (x, y) in ca.iter().zip(cb) {
            sum += (x - y) * (x - y);
        }
        if sum > bound {
            return None;
        }
    }
    Some(sum)
}

/// `k` nearest minority neighbours of each minority point (positions into
/// `minority`), excluding the point itself. Ties go to the lower row index.
fn nearest_neighbors(features: &Matrix, minority: &[usize], k: usize) -> Vec<Vec<usize>> {
    type Cand = (f64, usize, usize);
    let before = |a: &Cand, b: &Cand| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).is_lt();
    minority
        .par_iter()
        .enumerate()
        .map(|(qi, &q)| {
            let qrow = features.row(q);
            let mut best: Vec<Cand> = Vec::with_capacity(k + 1);
            for (pi, &p) in minority.iter().enumerate() {
                if pi == qi {
                    continue;
                }
                let bound = if best.len() == k {
                    best[k - 1].0
                } else {
                    f64::INFINITY
                };
                let Some(d) = sq_dist_within(qrow, features.row(p), bound) else {
                    continue;
                };
                let cand = (d, p, pi);
                if best.len() == k && !before(&cand, &best[k - 1]) {
                    continue;
                }
                let pos = best.partition_point(|e| before(e, &cand));
                best.insert(pos, cand);
                best.truncate(k);
            }
            best.into_iter().map(|(_, _, pi)| pi).collect()
        })
        .collect()
}

/// Oversamples the minority class among `train_rows` until it reaches
/// `ceil(target_ratio * majority)`. Rows outside `train_rows` are never read.
pub fn smote_oversample(
    features: &Matrix,
    labels: &[u8],
    train_rows: &[usize],
    config: &SmoteConfig,
) -> Result<SmoteOutput> {
    if features.n_rows() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "feature rows vs labels",
            left: features.n_rows(),
            right: labels.len(),
        });
    }
    if config.k == 0 {
        return Err(Error::InvalidParameter("SMOTE k must be >= 1".into()));
    }
    if !(config.target_ratio > 0.0 && config.target_ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "SMOTE target_ratio must lie in (0, 1], got {}",
            config.target_ratio
        )));
    }
    let n_pos = train_rows.iter().filter(|&&i| labels[i] == 1).count();
    let n_neg = train_rows.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let minority_label = u8::from(n_pos <= n_neg);
    let minority: Vec<usize> = train_rows
        .iter()
        .copied()
        .filter(|&i| labels[i] == minority_label)
        .collect();
    let n_major = train_rows.len() - minority.len();
    if minority.len() <= config.k {
        return Err(Error::ClassTooSmall {
            class: minority_label,
            count: minority.len(),
            needed: config.k + 1,
        });
    }
    let target = (config.target_ratio * n_major as f64).ceil() as usize;
    if target < minority.len() {
        return Err(Error::InvalidParameter(format!(
            "target_ratio {} is below the current minority/majority ratio {:.4}",
            config.target_ratio,
            minority.len() as f64 / n_major as f64
        )));
    }
    let n_new = target - minority.len();

    let mut out = features.select_rows(train_rows);
    let mut out_labels: Vec<u8> = train_rows.iter().map(|&i| labels[i]).collect();
    let mut origins = Vec::with_capacity(n_new);
    if n_new > 0 {
        let neighbors = nearest_neighbors(features, &minority, config.k);
        let drawn: Vec<(usize, usize, f64)> = (0..n_new)
            .into_par_iter()
            .map(|s| {
                let mut rng = derived_rng(config.seed, &[s as u64]);
                let qi = rng.random_range(0..minority.len());
                let nb = &neighbors[qi];
                let xi = nb[rng.random_range(0..nb.len())];
                let u: f64 = rng.random();
                (qi, xi, u)
            })
            .collect();
        for (qi, xi, u) in drawn {
            let (q, x) = (minority[qi], minority[xi]);
            out.push_row(&interpolate(features.row(q), features.row(x), u));
            out_labels.push(minority_label);
            origins.push(SyntheticOrigin {
                base_row: q,
                neighbor_row: x,
                u,
            });
        }
    }
    Ok(SmoteOutput {
        features: out,
        labels: out_labels,
        n_original: train_rows.len(),
        minority_label,
        origins,
    })
}

/// Per-class loss multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub negative: f64,
    pub positive: f64,
}

impl ClassWeights {
    pub const UNIT: ClassWeights = ClassWeights {
        negative: 1.0,
        positive: 1.0,
    };

    pub fn new(negative: f64, positive: f64) -> Result<Self> {
        let ok = |w: f64| w.is_finite() && w > 0.0;
        if !ok(negative) || !ok(positive) {
            return Err(Error::InvalidParameter(format!(
                "class weights must be positive and finite, got ({negative}, {positive})"
            )));
        }
        Ok(ClassWeights { negative, positive })
    }

    #[inline]
    pub fn of(&self, label: u8) -> f64 {
        if label == 1 {
            self.positive
        } else {
            self.negative
        }
    }
}

fn class_counts(labels: &[u8]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    (labels.len() - pos, pos)
}

/// `w_c = N / (2 * N_c)`.
pub fn balanced_class_weights(labels: &[u8]) -> Result<ClassWeights> {
    let (neg, pos) = class_counts(labels);
    if neg == 0 || pos == 0 {
        return Err(Error::SingleClass);
    }
    let n = labels.len() as f64;
    ClassWeights::new(n / (2.0 * neg as f64), n / (2.0 * pos as f64))
}

/// `N_neg / N_pos`, the boosting multiplier for positive-row gradients.
pub fn scale_pos_weight(labels: &[u8]) -> Result<f64> {
    let (neg, pos) = class_counts(labels);
    if pos == 0 {
        return Err(Error::NoPositives);
    }
    if neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok(neg as f64 / pos as f64)
}
