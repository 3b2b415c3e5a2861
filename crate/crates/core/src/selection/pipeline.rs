use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::DEFAULT_THRESHOLD;
use crate::model::{LearnerConfig, LearnerKind, Model};
use crate::resample::{balanced_class_weights, smote_oversample, ClassWeights, SmoteConfig};
use crate::rng::derive_seed;

const SMOTE_STREAM: u64 = 1;
const LEARNER_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Resampler {
    #[default]
    None,
    Smote(SmoteConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    None,
    /// `w_c = N / (2 N_c)` on the (possibly resampled) training rows.
    Balanced,
    Explicit(ClassWeights),
}

/// Resampling, weighting and learner settings applied to a set of training
/// rows. Resampling only ever sees the rows passed to [`PipelineSpec::fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub resampler: Resampler,
    pub weighting: Weighting,
    pub learner: LearnerConfig,
    pub threshold: f64,
}

/// Rows a learner is actually fit on, after resampling.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub n_synthetic: usize,
}

#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub model: Model,
    pub weights: ClassWeights,
    pub n_training_rows: usize,
    pub n_synthetic: usize,
}

impl PipelineSpec {
    pub fn new(learner: LearnerConfig) -> Self {
        PipelineSpec {
            resampler: Resampler::None,
            weighting: Weighting::None,
            learner,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn with_resampler(mut self, r: Resampler) -> Self {
        self.resampler = r;
        self
    }

    pub fn with_weighting(mut self, w: Weighting) -> Self {
        self.weighting = w;
        self
    }

    /// Non-fatal configuration concerns.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if matches!(self.resampler, Resampler::Smote(_)) && self.weighting != Weighting::None {
            out.push("SMOTE combined with class weighting double-counts the minority class".into());
        }
        if let LearnerConfig::Gbt(p) = &self.learner {
            if p.scale_pos_weight != 1.0 && self.weighting != Weighting::None {
                out.push(
                    "scale_pos_weight is multiplied by the pipeline class-weight ratio".into(),
                );
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in (0, 1], got {}",
                self.threshold
            )));
        }
        if let Weighting::Explicit(w) = self.weighting {
            ClassWeights::new(w.negative, w.positive)?;
        }
        Ok(())
    }

    pub fn learner_kind(&self) -> LearnerKind {
        self.learner.kind()
    }

    /// Applies the resampler to `train_rows` of `(x, y)` only.
    pub fn training_set(
        &self,
        x: &Matrix,
        y: &[u8],
        train_rows: &[usize],
        seed: u64,
    ) -> Result<TrainingSet> {
        match self.resampler {
            Resampler::None => Ok(TrainingSet {
                features: x.select_rows(train_rows),
                labels: train_rows.iter().map(|&r| y[r]).collect(),
                n_synthetic: 0,
            }),
            Resampler::Smote(cfg) => {
                let cfg = SmoteConfig {
                    seed: derive_seed(seed, &[SMOTE_STREAM, cfg.seed]),
                    ..cfg
                };
                let out = smote_oversample(x, y, train_rows, &cfg)?;
                let n_synthetic = out.n_synthetic();
                Ok(TrainingSet {
                    features: out.features,
                    labels: out.labels,
                    n_synthetic,
                })
            }
        }
    }

    pub fn class_weights(&self, labels: &[u8]) -> Result<ClassWeights> {
        match self.weighting {
            Weighting::None => Ok(ClassWeights::UNIT),
            Weighting::Balanced => balanced_class_weights(labels),
            Weighting::Explicit(w) => Ok(w),
        }
    }

    pub fn fit(
        &self,
        x: &Matrix,
        y: &[u8],
        train_rows: &[usize],
        seed: u64,
    ) -> Result<FittedPipeline> {
        self.validate()?;
        let set = self.training_set(x, y, train_rows, seed)?;
        self.fit_prepared(&set, seed)
    }

    /// Fits on rows that were already resampled.
    pub fn fit_prepared(&self, set: &TrainingSet, seed: u64) -> Result<FittedPipeline> {
        let weights = self.class_weights(&set.labels)?;
        let model = self.learner.fit(
            &set.features,
            &set.labels,
            &weights,
            derive_seed(seed, &[LEARNER_STREAM]),
        )?;
        Ok(FittedPipeline {
            model,
            weights,
            n_training_rows: set.labels.len(),
            n_synthetic: set.n_synthetic,
        })
    }
}
