use serde::{Deserialize, Serialize};

use super::pipeline::{PipelineSpec, Resampler, TrainingSet};
use crate::data::{stratified_split, Dataset};
use crate::error::Result;
use crate::metrics::{full_report, Evaluation, MetricsReport};
use crate::model::LearnerConfig;
use crate::resample::SmoteConfig;
use crate::rng::derive_seed;
use crate::tree::TreeParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeakageConfig {
    pub learner: LearnerConfig,
    pub resampler: Resampler,
    pub test_fraction: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for LeakageConfig {
    fn default() -> Self {
        LeakageConfig {
            learner: LearnerConfig::Dt(TreeParams::default()),
            resampler: Resampler::Smote(SmoteConfig::default()),
            test_fraction: 0.2,
            threshold: crate::metrics::DEFAULT_THRESHOLD,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    /// Split first, resample the training side only.
    pub correct: Evaluation,
    /// Resample everything, then split.
    pub leaky: Evaluation,
    /// `leaky - correct`, metric by metric.
    pub delta: MetricsReport,
    pub raw_prevalence: f64,
    pub correct_test_prevalence: f64,
    pub leaky_test_prevalence: f64,
    pub correct_test_rows: usize,
    pub leaky_test_rows: usize,
}

fn prevalence(y: &[u8]) -> f64 {
    y.iter().filter(|&&v| v == 1).count() as f64 / y.len() as f64
}

/// Runs the same learner under the correct protocol and under the
/// balance-then-split protocol, both with the same split seed.
pub fn leakage_demo(data: &Dataset, config: &LeakageConfig) -> Result<LeakageReport> {
    let (x, y) = (data.features(), data.labels());
    let spec = PipelineSpec {
        threshold: config.threshold,
        ..PipelineSpec::new(config.learner.clone()).with_resampler(config.resampler)
    };
    let split_seed = derive_seed(config.seed, &[0]);
    let fit_seed = derive_seed(config.seed, &[1]);

    let split = stratified_split(y, config.test_fraction, split_seed)?;
    let fitted = spec.fit(x, y, &split.train_rows, fit_seed)?;
    let test_y: Vec<u8> = split.test_rows.iter().map(|&r| y[r]).collect();
    let scores = fitted
        .model
        .predict_proba(&x.select_rows(&split.test_rows))?;
    let correct = full_report(&test_y, &scores, config.threshold)?;

    let all: Vec<usize> = (0..y.len()).collect();
    let balanced: TrainingSet = spec.training_set(x, y, &all, fit_seed)?;
    let leaky_split = stratified_split(&balanced.labels, config.test_fraction, split_seed)?;
    let plain = PipelineSpec {
        resampler: Resampler::None,
        ..spec
    };
    let fitted = plain.fit(
        &balanced.features,
        &balanced.labels,
        &leaky_split.train_rows,
        fit_seed,
    )?;
    let leaky_y: Vec<u8> = leaky_split
        .test_rows
        .iter()
        .map(|&r| balanced.labels[r])
        .collect();
    let scores = fitted
        .model
        .predict_proba(&balanced.features.select_rows(&leaky_split.test_rows))?;
    let leaky = full_report(&leaky_y, &scores, config.threshold)?;

    let (c, l) = (correct.metrics.csv_values(), leaky.metrics.csv_values());
    let d: Vec<f64> = l.iter().zip(c).map(|(a, b)| a - b).collect();
    Ok(LeakageReport {
        delta: MetricsReport {
            accuracy: d[0],
            f1: d[1],
            precision: d[2],
            recall: d[3],
            auc: d[4],
            auprc: d[5],
            gini: d[6],
        },
        correct,
        leaky,
        raw_prevalence: prevalence(y),
        correct_test_prevalence: prevalence(&test_y),
        leaky_test_prevalence: prevalence(&leaky_y),
        correct_test_rows: test_y.len(),
        leaky_test_rows: leaky_y.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::rng::{rng_from_seed, standard_normal};
    use rand::Rng;

    fn noisy(n: usize, seed: u64) -> Dataset {
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let pos = rng.random::<f64>() < 0.135;
            let s = if pos { 0.5 } else { 0.0 };
            rows.push([
                standard_normal(&mut rng) + s,
                standard_normal(&mut rng) + s,
                standard_normal(&mut rng),
            ]);
            y.push(u8::from(pos));
        }
        Dataset::from_matrix(Matrix::from_rows(&rows), y).unwrap()
    }

    #[test]
    fn no_resampler_means_identical_arms() {
        let d = noisy(500, 1);
        let cfg = LeakageConfig {
            resampler: Resampler::None,
            ..Default::default()
        };
        let r = leakage_demo(&d, &cfg).unwrap();
        assert_eq!(r.correct, r.leaky);
        assert!(r.delta.csv_values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn correct_arm_keeps_raw_prevalence() {
        let d = noisy(2000, 2);
        let r = leakage_demo(&d, &LeakageConfig::default()).unwrap();
        let n_pos = d.n_positive() as f64;
        assert!(
            (r.correct_test_prevalence * r.correct_test_rows as f64 - (0.2 * n_pos).round()).abs()
                <= 1.0
        );
        assert!(
            (r.correct_test_prevalence - r.raw_prevalence).abs() < 2.0 / r.correct_test_rows as f64
        );
        assert!((r.leaky_test_prevalence - 0.5).abs() < 0.01);
        assert!(r.leaky.metrics.recall > r.correct.metrics.recall);
        assert!(r.leaky.metrics.f1 > r.correct.metrics.f1);
    }
}
