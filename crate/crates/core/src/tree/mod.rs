//! CART classification trees, bagged random forests and Newton-boosted
//! regression trees, all sharing one exact greedy split engine.

mod boost;
mod cart;
mod forest;
mod grow;
mod importance;

use serde::{Deserialize, Serialize};

pub use boost::{train_boosted, train_boosted_traced, BoostParams, BoostedModel};
pub use cart::{train_tree, DecisionTree};
pub use forest::{train_forest, ForestModel, ForestParams};
pub use grow::{Tree, TreeNode};
pub use importance::FeatureImportance;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

impl Criterion {
    /// Impurity of a node with class masses `(neg, pos)`.
    pub fn impurity(self, neg: f64, pos: f64) -> f64 {
        let total = neg + pos;
        if total <= 0.0 {
            return 0.0;
        }
        let (p0, p1) = (neg / total, pos / total);
        match self {
            Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
            Criterion::Entropy => {
                let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
                h(p0) + h(p1)
            }
        }
    }
}

/// Features considered per split. `auto` is read as `sqrt`; `none`/null as `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[serde(alias = "auto")]
    Sqrt,
    Log2,
    #[default]
    #[serde(alias = "none")]
    All,
}

impl MaxFeatures {
    pub fn count(self, n_features: usize) -> usize {
        let n = n_features as f64;
        let k = match self {
            MaxFeatures::Sqrt => n.sqrt().floor() as usize,
            MaxFeatures::Log2 => n.log2().floor() as usize,
            MaxFeatures::All => n_features,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub criterion: Criterion,
    /// `None` grows until leaves are pure or size limits bite.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
        }
    }
}

impl TreeParams {
    fn validate(&self, n_rows: usize) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter(
                "min_samples_split must be >= 2".into(),
            ));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidParameter(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        if self.min_samples_leaf > n_rows {
            return Err(Error::InvalidParameter(format!(
                "min_samples_leaf {} exceeds the {} training rows",
                self.min_samples_leaf, n_rows
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_training_input(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.n_rows() == 0 {
        return Err(Error::EmptyTable);
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            what: "feature rows vs labels",
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if x.n_cols() == 0 {
        return Err(Error::InvalidParameter("no feature columns".into()));
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("features"));
    }
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidLabel(bad));
    }
    Ok(())
}

pub(crate) fn check_width(expected: usize, x: &Matrix) -> Result<()> {
    if x.n_cols() != expected {
        return Err(Error::WidthMismatch {
            expected,
            found: x.n_cols(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impurity_extremes() {
        assert_eq!(Criterion::Gini.impurity(5.0, 0.0), 0.0);
        assert_eq!(Criterion::Entropy.impurity(0.0, 3.0), 0.0);
        assert_eq!(Criterion::Gini.impurity(2.0, 2.0), 0.5);
        assert_eq!(Criterion::Entropy.impurity(2.0, 2.0), 1.0);
    }

    #[test]
    fn max_features_counts() {
        assert_eq!(MaxFeatures::Sqrt.count(30), 5);
        assert_eq!(MaxFeatures::Log2.count(30), 4);
        assert_eq!(MaxFeatures::All.count(30), 30);
        assert_eq!(MaxFeatures::Log2.count(1), 1);
        let auto: MaxFeatures = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(auto, MaxFeatures::Sqrt);
    }
}
