//! Held-out rows must never influence anything fitted on training rows:
//! rewriting them arbitrarily leaves resampling, fitted models, CV results
//! and benchmark searches bit-identical.

use rand::Rng;
use serde_json::json;
use skewlearn::bench::{
    generate_synthetic_table, run_benchmark, BenchmarkConfig, GridSet, Stage, SyntheticSpec,
};
use skewlearn::data::{fit_schema, Dataset, RawTable};
use skewlearn::model::{LearnerConfig, LearnerKind};
use skewlearn::resample::{smote_oversample, SmoteConfig};
use skewlearn::rng::{rng_from_seed, standard_normal};
use skewlearn::selection::{grid_search, HyperGrid, PipelineSpec, Resampler, SearchOptions};
use skewlearn::tree::TreeParams;
use skewlearn::Matrix;

fn cloud(n: usize, seed: u64) -> (Matrix, Vec<u8>) {
    let mut rng = rng_from_seed(seed);
    let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.2))).collect();
    let rows: Vec<Vec<f64>> = y
        .iter()
        .map(|&l| {
            (0..4)
                .map(|_| standard_normal(&mut rng) + f64::from(l))
                .collect()
        })
        .collect();
    (Matrix::from_rows(&rows), y)
}

/// Overwrites every row outside `keep` with noise and flips its label.
fn scramble(x: &Matrix, y: &[u8], keep: &[usize], seed: u64) -> (Matrix, Vec<u8>) {
    let mut rng = rng_from_seed(seed);
    let mut kept = vec![false; y.len()];
    for &r in keep {
        kept[r] = true;
    }
    let mut x2 = x.clone();
    let mut y2 = y.to_vec();
    for r in (0..y.len()).filter(|&r| !kept[r]) {
        for v in x2.row_mut(r) {
            *v = 100.0 * standard_normal(&mut rng);
        }
        y2[r] = 1 - y2[r];
    }
    (x2, y2)
}

fn train_half(n: usize) -> Vec<usize> {
    (0..n).filter(|r| r % 3 != 0).collect()
}

#[test]
fn smote_reads_only_training_rows() {
    let (x, y) = cloud(400, 1);
    let train = train_half(400);
    let (x2, y2) = scramble(&x, &y, &train, 2);
    let cfg = SmoteConfig {
        seed: 9,
        ..Default::default()
    };
    let a = smote_oversample(&x, &y, &train, &cfg).unwrap();
    let b = smote_oversample(&x2, &y2, &train, &cfg).unwrap();
    assert_eq!(a.features, b.features);
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.origins, b.origins);
}

#[test]
fn fitted_pipelines_ignore_held_out_rows() {
    let (x, y) = cloud(500, 3);
    let train = train_half(500);
    let (x2, y2) = scramble(&x, &y, &train, 4);
    let learners = [
        LearnerKind::Lr.default_config(),
        LearnerConfig::Dt(TreeParams {
            max_depth: Some(6),
            ..Default::default()
        }),
        LearnerKind::Gbt.default_config(),
    ];
    for learner in learners {
        let spec =
            PipelineSpec::new(learner).with_resampler(Resampler::Smote(SmoteConfig::default()));
        let a = spec.fit(&x, &y, &train, 11).unwrap();
        let b = spec.fit(&x2, &y2, &train, 11).unwrap();
        assert_eq!(
            serde_json::to_string(&a.model).unwrap(),
            serde_json::to_string(&b.model).unwrap(),
            "{:?}",
            spec.learner.kind()
        );
        assert_eq!(a.n_synthetic, b.n_synthetic);
    }
}

#[test]
fn cross_validation_ignores_rows_outside_the_training_partition() {
    let (x, y) = cloud(450, 5);
    let train = train_half(450);
    let (x2, y2) = scramble(&x, &y, &train, 6);
    let grid = HyperGrid::new(LearnerKind::Dt).with("max_depth", vec![json!(2), json!(4)]);
    let template = PipelineSpec::new(LearnerKind::Dt.default_config())
        .with_resampler(Resampler::Smote(SmoteConfig::default()));
    let options = SearchOptions {
        k: 3,
        seed: 21,
        ..Default::default()
    };
    let run = |x: Matrix, y: Vec<u8>| {
        let data = Dataset::from_matrix(x, y).unwrap();
        grid_search(&data, &train, &template, &grid, &options).unwrap()
    };
    let a = run(x, y);
    let b = run(x2, y2);
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    assert_eq!(a.summary_json(), b.summary_json());
}

#[test]
fn benchmark_training_side_ignores_test_rows() {
    let table = generate_synthetic_table(&SyntheticSpec {
        n_rows: 1500,
        seed: 8,
        ..Default::default()
    })
    .unwrap();
    let config = BenchmarkConfig {
        stages: vec![Stage::Baseline, Stage::SmoteTuned],
        learners: vec![LearnerKind::Lr, LearnerKind::Dt],
        grids: GridSet::Reduced,
        folds: 3,
        seed: 4,
        ..Default::default()
    };
    let labels = fit_schema(&table, &config.target)
        .unwrap()
        .labels(&table)
        .unwrap();
    let split = config.split(&labels).unwrap();

    // Rewrite every present numeric cell of the test rows.
    let numeric: Vec<usize> = (0..table.headers().len())
        .filter(|&c| table.headers()[c].starts_with("num_"))
        .collect();
    assert!(!numeric.is_empty());
    let mut rows = table.rows().to_vec();
    for &r in &split.test_rows {
        for &c in &numeric {
            if rows[r][c].is_some() {
                rows[r][c] = Some(format!("{}", 1000.0 + r as f64));
            }
        }
    }
    let perturbed = RawTable::new(table.headers().to_vec(), rows).unwrap();

    let a = run_benchmark(&table, &config).unwrap();
    let b = run_benchmark(&perturbed, &config).unwrap();
    assert_eq!(a.cells.len(), 4);
    for (ca, cb) in a.cells.iter().zip(&b.cells) {
        assert_eq!(ca.error, None);
        assert_eq!(
            serde_json::to_value(&ca.search).unwrap(),
            serde_json::to_value(&cb.search).unwrap(),
            "stage {:?} {:?}",
            ca.stage,
            ca.model
        );
        assert_eq!(
            serde_json::to_value(&ca.importance).unwrap(),
            serde_json::to_value(&cb.importance).unwrap()
        );
    }
    assert_eq!(a.n_test, split.test_rows.len());
}
