use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::grid::{Candidate, HyperGrid};
use super::kfold::stratified_kfold;
use super::pipeline::{PipelineSpec, Resampler, TrainingSet};
use super::{ResampleScope, Scoring};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::LearnerKind;
use crate::rng::derive_seed;

const FOLD_STREAM: u64 = 0xF01D;
const TASK_STREAM: u64 = 0x7A5C;
const ONCE_STREAM: u64 = 0x0AC3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    pub k: usize,
    pub scoring: Scoring,
    pub seed: u64,
    pub scope: ResampleScope,
    /// Record failing configurations and keep searching instead of
    /// returning the first failure.
    pub skip_failed: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            k: 5,
            scoring: Scoring::F1,
            seed: 0,
            scope: ResampleScope::Fold,
            skip_failed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigResult {
    pub index: usize,
    pub params: IndexMap<String, Value>,
    /// Empty when the configuration failed.
    pub fold_scores: Vec<f64>,
    pub task_seeds: Vec<u64>,
    pub mean_score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub model: LearnerKind,
    pub scoring: Scoring,
    pub k: usize,
    pub scope: ResampleScope,
    pub fold_seed: u64,
    pub configs: Vec<ConfigResult>,
    pub best_index: usize,
    pub best_pipeline: PipelineSpec,
    pub warnings: Vec<String>,
}

impl CvResult {
    pub fn best(&self) -> &ConfigResult {
        &self.configs[self.best_index]
    }

    pub fn best_params(&self) -> &IndexMap<String, Value> {
        &self.best().params
    }

    pub fn best_score(&self) -> f64 {
        self.best()
            .mean_score
            .expect("best configuration has a score")
    }

    /// One row per configuration and fold.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["config", "fold", "score", "params"])?;
        for c in &self.configs {
            let params = Value::from(serde_json::Map::from_iter(c.params.clone())).to_string();
            if c.fold_scores.is_empty() {
                w.write_record([
                    c.index.to_string(),
                    String::new(),
                    String::new(),
                    params.clone(),
                ])?;
            }
            for (f, s) in c.fold_scores.iter().enumerate() {
                w.write_record([
                    c.index.to_string(),
                    f.to_string(),
                    s.to_string(),
                    params.clone(),
                ])?;
            }
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("<memory>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "model": self.model.code(),
            "scoring": self.scoring.name(),
            "k": self.k,
            "resample_scope": self.scope,
            "fold_seed": self.fold_seed,
            "n_candidates": self.configs.len(),
            "best_index": self.best_index,
            "best_score": self.best_score(),
            "best_params": self.best_params(),
            "best_pipeline": self.best_pipeline,
            "warnings": self.warnings,
            "configs": self.configs,
        })
    }
}

struct Fold {
    train: Vec<usize>,
    val_x: Matrix,
    val_y: Vec<u8>,
}

/// Cross-validated search over `grid` using only `train_rows`.
///
/// For every (configuration, fold) the pipeline's resampler and weights are
/// fit on the training folds, and the untouched validation fold is scored.
/// The best configuration has the highest mean score; ties go to the earlier
/// one. Tasks run in parallel with seeds derived from
/// `(seed, configuration, fold)`.
pub fn grid_search(
    data: &Dataset,
    train_rows: &[usize],
    template: &PipelineSpec,
    grid: &HyperGrid,
    options: &SearchOptions,
) -> Result<CvResult> {
    let mut candidates = grid.candidates(template)?;
    let mut warnings: Vec<String> = Vec::new();
    for c in &candidates {
        for w in c.pipeline.warnings() {
            if !warnings.contains(&w) {
                log::warn!("{w}");
                warnings.push(w);
            }
        }
    }

    let (x, y) = (data.features(), data.labels());
    let once;
    let (cv_x, cv_y, rows): (&Matrix, &[u8], Vec<usize>) = match (options.scope, template.resampler)
    {
        (ResampleScope::TrainOnce, Resampler::Smote(_)) => {
            once = template.training_set(
                x,
                y,
                train_rows,
                derive_seed(options.seed, &[ONCE_STREAM]),
            )?;
            for c in &mut candidates {
                c.pipeline.resampler = Resampler::None;
            }
            warnings.push(
                "SMOTE applied before folding: validation folds contain synthetic rows".into(),
            );
            (
                &once.features,
                &once.labels,
                (0..once.labels.len()).collect(),
            )
        }
        _ => (x, y, train_rows.to_vec()),
    };

    let local_y: Vec<u8> = rows.iter().map(|&r| cv_y[r]).collect();
    let fold_seed = derive_seed(options.seed, &[FOLD_STREAM]);
    let fold_pos = stratified_kfold(&local_y, options.k, fold_seed)?;
    let mut is_val = vec![usize::MAX; rows.len()];
    for (f, positions) in fold_pos.iter().enumerate() {
        for &p in positions {
            is_val[p] = f;
        }
    }
    let folds: Vec<Fold> = fold_pos
        .iter()
        .enumerate()
        .map(|(f, positions)| {
            let val: Vec<usize> = positions.iter().map(|&p| rows[p]).collect();
            let train: Vec<usize> = (0..rows.len())
                .filter(|&p| is_val[p] != f)
                .map(|p| rows[p])
                .collect();
            Fold {
                val_y: val.iter().map(|&r| cv_y[r]).collect(),
                val_x: cv_x.select_rows(&val),
                train,
            }
        })
        .collect();
    // Leakage guard: a fold's training rows never include its validation rows.
    for (f, fold) in folds.iter().enumerate() {
        let mut seen = vec![false; cv_x.n_rows()];
        for &p in &fold_pos[f] {
            seen[rows[p]] = true;
        }
        assert!(
            fold.train.iter().all(|&r| !seen[r]),
            "validation rows leaked into fold {f}"
        );
    }

    let tasks: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();
    let outcomes: Vec<Result<f64>> = tasks
        .par_iter()
        .map(|&(c, f)| {
            let seed = task_seed(options.seed, c, f);
            run_task(&candidates[c], &folds[f], cv_x, cv_y, options, seed).map_err(|e| {
                Error::Task {
                    config: c,
                    fold: f,
                    source: Box::new(e),
                }
            })
        })
        .collect();

    let mut configs = Vec::with_capacity(candidates.len());
    let mut first_error = None;
    let mut outcomes = outcomes.into_iter();
    for cand in &candidates {
        let mut scores = Vec::with_capacity(folds.len());
        let mut error = None;
        for _ in 0..folds.len() {
            match outcomes.next().expect("one outcome per task") {
                Ok(s) => scores.push(s),
                Err(e) => {
                    if error.is_none() {
                        error = Some(e.to_string());
                    }
                    if first_error.is_none() {
                        first_error = Some(e);
                    }
                }
            }
        }
        if error.is_some() {
            if !options.skip_failed {
                return Err(first_error.expect("error recorded"));
            }
            log::warn!(
                "configuration {} failed: {}",
                cand.index,
                error.as_deref().unwrap_or("")
            );
            scores.clear();
        }
        let mean_score = error
            .is_none()
            .then(|| scores.iter().sum::<f64>() / scores.len() as f64);
        configs.push(ConfigResult {
            index: cand.index,
            params: cand.params.clone(),
            fold_scores: scores,
            task_seeds: (0..folds.len())
                .map(|f| task_seed(options.seed, cand.index, f))
                .collect(),
            mean_score,
            error,
        });
    }

    let mut best: Option<(usize, f64)> = None;
    for c in &configs {
        if let Some(m) = c.mean_score {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((c.index, m));
            }
        }
    }
    let Some((best_index, _)) = best else {
        return Err(first_error.unwrap_or_else(|| Error::InvalidParameter("empty grid".into())));
    };
    Ok(CvResult {
        model: grid.model,
        scoring: options.scoring,
        k: options.k,
        scope: options.scope,
        fold_seed,
        configs,
        best_index,
        best_pipeline: candidates[best_index].pipeline.clone(),
        warnings,
    })
}

fn task_seed(seed: u64, config: usize, fold: usize) -> u64 {
    derive_seed(seed, &[TASK_STREAM, config as u64, fold as u64])
}

fn run_task(
    cand: &Candidate,
    fold: &Fold,
    x: &Matrix,
    y: &[u8],
    options: &SearchOptions,
    seed: u64,
) -> Result<f64> {
    let set: TrainingSet = cand.pipeline.training_set(x, y, &fold.train, seed)?;
    let fitted = cand.pipeline.fit_prepared(&set, seed)?;
    let scores = fitted.model.predict_proba(&fold.val_x)?;
    options
        .scoring
        .score(&fold.val_y, &scores, cand.pipeline.threshold)
}
