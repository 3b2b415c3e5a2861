use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{GridSet, Stage, SYNTHETIC_TARGET};
use crate::data::{encode, fit_schema, stratified_split, Dataset, RawTable, SplitIndices};
use crate::error::Result;
use crate::metrics::{full_report, Evaluation, DEFAULT_THRESHOLD};
use crate::model::LearnerKind;
use crate::resample::SmoteConfig;
use crate::rng::derive_seed;
use crate::selection::{
    grid_search, PipelineSpec, ResampleScope, Resampler, Scoring, SearchOptions,
};
use crate::tree::FeatureImportance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub target: String,
    pub stages: Vec<Stage>,
    pub learners: Vec<LearnerKind>,
    pub seed: u64,
    pub test_fraction: f64,
    pub folds: usize,
    pub scoring: Scoring,
    pub resample_scope: ResampleScope,
    pub grids: GridSet,
    pub smote: SmoteConfig,
    pub threshold: f64,
    /// Run the MLP in the baseline stage too.
    pub include_dl_baseline: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            target: SYNTHETIC_TARGET.to_string(),
            stages: Stage::ALL.to_vec(),
            learners: LearnerKind::ALL.to_vec(),
            seed: 0,
            test_fraction: 0.2,
            folds: 5,
            scoring: Scoring::F1,
            resample_scope: ResampleScope::Fold,
            grids: GridSet::Paper,
            smote: SmoteConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            include_dl_baseline: false,
        }
    }
}

impl BenchmarkConfig {
    /// The train/test partition a benchmark with this config uses.
    pub fn split(&self, labels: &[u8]) -> Result<SplitIndices> {
        stratified_split(
            labels,
            self.test_fraction,
            derive_seed(self.seed, &[0x5B17]),
        )
    }

    /// Learner/stage pairs that will run, in report order.
    pub fn cells(&self) -> Vec<(Stage, LearnerKind)> {
        let mut stages = self.stages.clone();
        stages.sort();
        stages.dedup();
        stages
            .into_iter()
            .flat_map(|s| {
                self.learners
                    .iter()
                    .copied()
                    .filter(move |&l| {
                        s != Stage::Baseline || l != LearnerKind::Mlp || self.include_dl_baseline
                    })
                    .map(move |l| (s, l))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSummary {
    pub scoring: Scoring,
    pub n_candidates: usize,
    pub n_failed: usize,
    pub best_index: usize,
    pub best_score: f64,
    pub best_params: IndexMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub stage: Stage,
    pub model: LearnerKind,
    pub evaluation: Option<Evaluation>,
    pub error: Option<String>,
    pub search: Option<SearchSummary>,
    /// Per encoded column.
    pub importance: Option<FeatureImportance>,
    /// Summed back onto source columns.
    pub importance_by_source: Option<FeatureImportance>,
    pub warnings: Vec<String>,
    /// Wall-clock seconds; not part of any byte-stable output.
    #[serde(skip)]
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    /// SHA-256 over the configuration, the grids used and the input table.
    pub config_digest: String,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train_prevalence: f64,
    pub test_prevalence: f64,
    pub feature_names: Vec<String>,
    pub cells: Vec<CellResult>,
}

impl BenchmarkReport {
    pub fn cell(&self, stage: Stage, model: LearnerKind) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.stage == stage && c.model == model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn digest(config: &BenchmarkConfig, table: &RawTable) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config)?);
    for (stage, model) in config.cells() {
        if stage != Stage::Baseline {
            if let Ok(text) = config.grids.text(stage, model) {
                h.update(text.as_bytes());
            }
        }
    }
    let mut csv = Vec::new();
    table.to_writer(&mut csv)?;
    h.update(&csv);
    Ok(hex::encode(h.finalize()))
}

fn prevalence(y: &[u8], rows: &[usize]) -> f64 {
    rows.iter().filter(|&&r| y[r] == 1).count() as f64 / rows.len() as f64
}

/// Runs every (stage, learner) cell on one stratified split of `table`.
///
/// Categories are collected from the whole table, numeric imputation and
/// scaling statistics from the training rows only. All fitting, resampling
/// and tuning sees training rows only; the test rows are scored once per
/// cell. A failing cell records its error and the rest still run.
pub fn run_benchmark(table: &RawTable, config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    let config_digest = digest(config, table)?;
    let mut schema = fit_schema(table, &config.target)?;
    let labels = schema.labels(table)?;
    let split = config.split(&labels)?;
    schema.refit_numeric(table, &split.train_rows)?;
    let data = encode(table, &schema)?;
    let mut is_test = vec![false; data.n_rows()];
    for &r in &split.test_rows {
        is_test[r] = true;
    }
    assert!(
        split.train_rows.iter().all(|&r| !is_test[r]),
        "test rows in the training partition"
    );

    let test_x = data.features().select_rows(&split.test_rows);
    let test_y: Vec<u8> = split.test_rows.iter().map(|&r| labels[r]).collect();

    let mut cells = Vec::new();
    for (stage, model) in config.cells() {
        let start = Instant::now();
        log::info!("stage {} {}: start", stage.number(), model.code());
        let seed = derive_seed(config.seed, &[u64::from(stage.number()), model as u64]);
        let mut cell = CellResult {
            stage,
            model,
            evaluation: None,
            error: None,
            search: None,
            importance: None,
            importance_by_source: None,
            warnings: Vec::new(),
            runtime_secs: 0.0,
        };
        let outcome = run_cell(
            &data,
            &split.train_rows,
            &test_x,
            &test_y,
            config,
            stage,
            model,
            seed,
            &mut cell,
        );
        if let Err(e) = outcome {
            log::warn!("stage {} {} failed: {e}", stage.number(), model.code());
            cell.error = Some(e.to_string());
        }
        cell.runtime_secs = start.elapsed().as_secs_f64();
        log::info!(
            "stage {} {}: {:.1}s",
            stage.number(),
            model.code(),
            cell.runtime_secs
        );
        cells.push(cell);
    }

    Ok(BenchmarkReport {
        config: config.clone(),
        config_digest,
        n_rows: data.n_rows(),
        n_train: split.train_rows.len(),
        n_test: split.test_rows.len(),
        train_prevalence: prevalence(&labels, &split.train_rows),
        test_prevalence: prevalence(&labels, &split.test_rows),
        feature_names: data.feature_names().to_vec(),
        cells,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    data: &Dataset,
    train_rows: &[usize],
    test_x: &crate::Matrix,
    test_y: &[u8],
    config: &BenchmarkConfig,
    stage: Stage,
    model: LearnerKind,
    seed: u64,
    cell: &mut CellResult,
) -> Result<()> {
    let base = PipelineSpec {
        threshold: config.threshold,
        ..PipelineSpec::new(model.default_config())
    };
    let pipeline = match stage {
        Stage::Baseline => base,
        Stage::SmoteTuned | Stage::WeightedTuned => {
            let template = if stage == Stage::SmoteTuned {
                base.with_resampler(Resampler::Smote(config.smote))
            } else {
                base
            };
            let grid = config.grids.load(stage, model)?;
            let options = SearchOptions {
                k: config.folds,
                scoring: config.scoring,
                seed: derive_seed(seed, &[1]),
                scope: config.resample_scope,
                skip_failed: true,
            };
            let cv = grid_search(data, train_rows, &template, &grid, &options)?;
            cell.warnings = cv.warnings.clone();
            cell.search = Some(SearchSummary {
                scoring: cv.scoring,
                n_candidates: cv.configs.len(),
                n_failed: cv.configs.iter().filter(|c| c.error.is_some()).count(),
                best_index: cv.best_index,
                best_score: cv.best_score(),
                best_params: cv.best_params().clone(),
            });
            cv.best_pipeline
        }
    };
    let fitted = pipeline.fit(
        data.features(),
        data.labels(),
        train_rows,
        derive_seed(seed, &[2]),
    )?;
    let scores = fitted.model.predict_proba(test_x)?;
    cell.evaluation = Some(full_report(test_y, &scores, pipeline.threshold)?);
    if let Some(imp) = fitted.model.importance(data.feature_names()) {
        cell.importance_by_source = Some(imp.rollup(data.groups()));
        cell.importance = Some(imp);
    }
    Ok(())
}
