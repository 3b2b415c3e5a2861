//! Stratified cross-validation, hyperparameter search and the leakage-safe
//! training pipeline.

mod grid;
mod kfold;
mod leakage;
mod pipeline;
mod search;

use serde::{Deserialize, Serialize};

pub use grid::{Candidate, GridValues, HyperGrid, SearchStrategy, GRID_FORMAT_VERSION};
pub use kfold::stratified_kfold;
pub use leakage::{leakage_demo, LeakageConfig, LeakageReport};
pub use pipeline::{FittedPipeline, PipelineSpec, Resampler, TrainingSet, Weighting};
pub use search::{grid_search, ConfigResult, CvResult, SearchOptions};

use crate::error::{Error, Result};
use crate::metrics::{
    confusion_matrix, pr_auc, precision_recall_f1, roc_auc, threshold_predictions,
};

/// Metric maximized by the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    F1,
    Auc,
    Auprc,
    Recall,
    Accuracy,
}

impl Scoring {
    pub fn name(self) -> &'static str {
        match self {
            Scoring::F1 => "f1",
            Scoring::Auc => "auc",
            Scoring::Auprc => "auprc",
            Scoring::Recall => "recall",
            Scoring::Accuracy => "accuracy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [
            Scoring::F1,
            Scoring::Auc,
            Scoring::Auprc,
            Scoring::Recall,
            Scoring::Accuracy,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown scoring '{s}'")))
    }

    pub fn score(self, truth: &[u8], scores: &[f64], threshold: f64) -> Result<f64> {
        match self {
            Scoring::Auc => roc_auc(truth, scores),
            Scoring::Auprc => pr_auc(truth, scores),
            _ => {
                let cm = confusion_matrix(truth, &threshold_predictions(scores, threshold))?;
                let (_, recall, f1) = precision_recall_f1(&cm);
                Ok(match self {
                    Scoring::F1 => f1,
                    Scoring::Recall => recall,
                    _ => cm.accuracy(),
                })
            }
        }
    }
}

/// Where SMOTE runs during a search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleScope {
    /// Inside each fold, on the training folds only.
    #[default]
    Fold,
    /// Once on the whole training partition before folding. Synthetic rows
    /// then land in validation folds; kept to reproduce that protocol.
    TrainOnce,
}

impl ResampleScope {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fold" => Ok(ResampleScope::Fold),
            "train-once" => Ok(ResampleScope::TrainOnce),
            _ => Err(Error::InvalidParameter(format!(
                "unknown resample scope '{s}'"
            ))),
        }
    }
}
