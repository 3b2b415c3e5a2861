use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Contiguous block of encoded columns produced by one source column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub source: String,
    pub start: usize,
    pub len: usize,
}

/// Encoded design matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    groups: Vec<FeatureGroup>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        groups: Vec<FeatureGroup>,
    ) -> Result<Self> {
        if features.n_rows() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "feature rows vs labels",
                left: features.n_rows(),
                right: labels.len(),
            });
        }
        if feature_names.len() != features.n_cols() {
            return Err(Error::LengthMismatch {
                what: "feature names vs columns",
                left: feature_names.len(),
                right: features.n_cols(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidLabel(bad));
        }
        if !features.all_finite() {
            return Err(Error::NonFinite("encoded features"));
        }
        let covered: usize = groups.iter().map(|g| g.len).sum();
        if covered != features.n_cols() && !groups.is_empty() {
            return Err(Error::LengthMismatch {
                what: "feature groups vs columns",
                left: covered,
                right: features.n_cols(),
            });
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            groups,
        })
    }

    /// Dataset with generated names `x0..` and one group per column.
    pub fn from_matrix(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        let names: Vec<String> = (0..features.n_cols()).map(|j| format!("x{j}")).collect();
        let groups = names
            .iter()
            .enumerate()
            .map(|(j, n)| FeatureGroup {
                source: n.clone(),
                start: j,
                len: 1,
            })
            .collect();
        Dataset::new(features, labels, names, groups)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn prevalence(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.n_positive() as f64 / self.labels.len() as f64
    }

    /// Rows `idx` as a new dataset (same columns, same groups).
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            groups: self.groups.clone(),
        }
    }

    pub fn into_parts(self) -> (Matrix, Vec<u8>) {
        (self.features, self.labels)
    }
}
