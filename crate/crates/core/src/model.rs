//! One configuration type and one model type covering all five learner
//! families, plus the JSON envelope used to persist trained models.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::FeatureSchema;
use crate::error::{Error, Result};
use crate::linear::{train_logistic, LinearModel, LogisticConfig};
use crate::matrix::Matrix;
use crate::mlp::{train_mlp, MlpArchitecture, MlpModel};
use crate::resample::ClassWeights;
use crate::tree::{
    train_boosted, train_forest, train_tree, BoostParams, BoostedModel, DecisionTree,
    FeatureImportance, ForestModel, ForestParams, TreeParams,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Lr,
    Dt,
    Rf,
    Gbt,
    Mlp,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::Lr,
        LearnerKind::Dt,
        LearnerKind::Rf,
        LearnerKind::Gbt,
        LearnerKind::Mlp,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LearnerKind::Lr => "lr",
            LearnerKind::Dt => "dt",
            LearnerKind::Rf => "rf",
            LearnerKind::Gbt => "gbt",
            LearnerKind::Mlp => "mlp",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            LearnerKind::Lr => "Logistic Regression",
            LearnerKind::Dt => "Decision Tree",
            LearnerKind::Rf => "Random Forest",
            LearnerKind::Gbt => "Gradient Boosting",
            LearnerKind::Mlp => "MLP",
        }
    }

    pub fn parse(code: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.code() == code)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model '{code}'")))
    }

    pub fn default_config(self) -> LearnerConfig {
        match self {
            LearnerKind::Lr => LearnerConfig::Lr(LogisticConfig::default()),
            LearnerKind::Dt => LearnerConfig::Dt(TreeParams::default()),
            LearnerKind::Rf => LearnerConfig::Rf(ForestParams::default()),
            LearnerKind::Gbt => LearnerConfig::Gbt(BoostParams::default()),
            LearnerKind::Mlp => LearnerConfig::Mlp(MlpArchitecture::default()),
        }
    }
}

/// Hyperparameters of one learner, tagged by `"model"` in JSON:
/// `{"model": "dt", "max_depth": 5, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LearnerConfig {
    Lr(LogisticConfig),
    Dt(TreeParams),
    Rf(ForestParams),
    Gbt(BoostParams),
    Mlp(MlpArchitecture),
}

impl LearnerConfig {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerConfig::Lr(_) => LearnerKind::Lr,
            LearnerConfig::Dt(_) => LearnerKind::Dt,
            LearnerConfig::Rf(_) => LearnerKind::Rf,
            LearnerConfig::Gbt(_) => LearnerKind::Gbt,
            LearnerConfig::Mlp(_) => LearnerKind::Mlp,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Trains on all rows of `x`. Boosting realizes `weights` as a
    /// multiplier on its `scale_pos_weight` (positive over negative weight);
    /// the MLP seed is replaced by `seed`.
    pub fn fit(&self, x: &Matrix, y: &[u8], weights: &ClassWeights, seed: u64) -> Result<Model> {
        Ok(match self {
            LearnerConfig::Lr(c) => Model::Lr(train_logistic(x, y, weights, c)?),
            LearnerConfig::Dt(p) => Model::Dt(train_tree(x, y, weights, p, seed)?),
            LearnerConfig::Rf(p) => Model::Rf(train_forest(x, y, weights, p, seed)?),
            LearnerConfig::Gbt(p) => {
                let mut p = *p;
                p.scale_pos_weight *= weights.positive / weights.negative;
                Model::Gbt(train_boosted(x, y, &p, seed)?)
            }
            LearnerConfig::Mlp(a) => {
                let a = MlpArchitecture { seed, ..a.clone() };
                let w = (*weights != ClassWeights::UNIT).then_some(weights);
                Model::Mlp(train_mlp(x, y, &a, w)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum Model {
    Lr(LinearModel),
    Dt(DecisionTree),
    Rf(ForestModel),
    Gbt(BoostedModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn kind(&self) -> LearnerKind {
        match self {
            Model::Lr(_) => LearnerKind::Lr,
            Model::Dt(_) => LearnerKind::Dt,
            Model::Rf(_) => LearnerKind::Rf,
            Model::Gbt(_) => LearnerKind::Gbt,
            Model::Mlp(_) => LearnerKind::Mlp,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Lr(m) => m.n_features(),
            Model::Dt(m) => m.n_features,
            Model::Rf(m) => m.n_features,
            Model::Gbt(m) => m.n_features,
            Model::Mlp(m) => m.input_width(),
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            Model::Lr(m) => m.predict_proba(x),
            Model::Dt(m) => m.predict_proba(x),
            Model::Rf(m) => m.predict_proba(x),
            Model::Gbt(m) => m.predict_proba(x),
            Model::Mlp(m) => m.predict_proba(x),
        }
    }

    /// Gain-based importances for the tree families, `None` otherwise.
    pub fn importance(&self, names: &[String]) -> Option<FeatureImportance> {
        match self {
            Model::Dt(m) => Some(FeatureImportance::of_tree(m, names)),
            Model::Rf(m) => Some(FeatureImportance::of_forest(m, names)),
            Model::Gbt(m) => Some(FeatureImportance::of_boosted(m, names)),
            Model::Lr(_) | Model::Mlp(_) => None,
        }
    }
}

/// On-disk model: the fitted schema (if trained from a table) travels with
/// the predictor so evaluation encodes new data identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format_version: u32,
    pub schema: Option<FeatureSchema>,
    pub feature_names: Vec<String>,
    pub config: LearnerConfig,
    pub model: Model,
}

impl SavedModel {
    pub fn new(
        schema: Option<FeatureSchema>,
        feature_names: Vec<String>,
        config: LearnerConfig,
        model: Model,
    ) -> Self {
        SavedModel {
            format_version: MODEL_FORMAT_VERSION,
            schema,
            feature_names,
            config,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let found = v.get("format_version").and_then(|f| f.as_u64());
        if found != Some(u64::from(MODEL_FORMAT_VERSION)) {
            return Err(Error::FormatVersion {
                expected: MODEL_FORMAT_VERSION,
                found: found.unwrap_or(0) as u32,
            });
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
