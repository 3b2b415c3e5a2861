//! Seeded stand-in for claim data: Gaussian numeric features shifted for
//! positives, categorical features with class-dependent odds.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{encode, fit_schema, Dataset, RawTable};
use crate::error::{Error, Result};
use crate::rng::{derived_rng, standard_normal};

pub const SYNTHETIC_TARGET: &str = "NbClaimsTot";

const LABEL_STREAM: u64 = 0x1AB;
const ROW_STREAM: u64 = 0x50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub positive_fraction: f64,
    pub n_numeric: usize,
    pub n_categorical: usize,
    pub n_categories: usize,
    /// Scale of the class separation; 0 makes features independent of the label.
    pub signal_strength: f64,
    /// Share of categorical cells left empty, independent of the label.
    pub missing_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_rows: 20_000,
            positive_fraction: 0.135,
            n_numeric: 6,
            n_categorical: 4,
            n_categories: 5,
            signal_strength: 0.6,
            missing_fraction: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.positive_fraction > 0.0 && self.positive_fraction <= 0.5) {
            return bad(format!(
                "positive_fraction must lie in (0, 0.5], got {}",
                self.positive_fraction
            ));
        }
        if self.n_numeric + self.n_categorical == 0 {
            return bad("need at least one feature".into());
        }
        if self.n_categorical > 0 && self.n_categories < 2 {
            return bad("n_categories must be >= 2".into());
        }
        if !(self.signal_strength >= 0.0 && self.signal_strength.is_finite()) {
            return bad("signal_strength must be finite and >= 0".into());
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return bad("missing_fraction must lie in [0, 1)".into());
        }
        let pos = self.n_positive();
        if pos < 2 || self.n_rows - pos < 2 {
            return bad(format!(
                "positive_fraction {} is infeasible for {} rows",
                self.positive_fraction, self.n_rows
            ));
        }
        Ok(())
    }

    pub fn n_positive(&self) -> usize {
        (self.positive_fraction * self.n_rows as f64).round() as usize
    }

    /// Mean shift of numeric feature `j` for positives.
    pub fn numeric_shift(&self, j: usize) -> f64 {
        self.signal_strength * (1.0 - j as f64 / self.n_numeric.max(1) as f64)
    }

    /// Category probabilities of categorical feature `f` for class `label`.
    pub fn category_probs(&self, f: usize, label: u8) -> Vec<f64> {
        let k = self.n_categories;
        let tilt = if label == 1 {
            self.signal_strength * (1.0 - f as f64 / self.n_categorical.max(1) as f64)
        } else {
            0.0
        };
        let raw: Vec<f64> = (0..k)
            .map(|c| (tilt * (c as f64 / (k - 1) as f64 - 0.5) * 2.0).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }

    pub fn category_name(c: usize) -> String {
        format!("c{}", c + 1)
    }

    pub fn column_names(&self) -> Vec<String> {
        (0..self.n_numeric)
            .map(|j| format!("num_{}", j + 1))
            .chain((0..self.n_categorical).map(|f| format!("cat_{}", f + 1)))
            .chain([SYNTHETIC_TARGET.to_string()])
            .collect()
    }

    /// Bayes log-likelihood ratio of a row under the generating model; a
    /// missing category carries no information.
    pub fn log_likelihood_ratio(&self, numeric: &[f64], categories: &[Option<usize>]) -> f64 {
        let num: f64 = numeric
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let m = self.numeric_shift(j);
                m * x - 0.5 * m * m
            })
            .sum();
        let cat: f64 = categories
            .iter()
            .enumerate()
            .filter_map(|(f, c)| {
                c.map(|c| (self.category_probs(f, 1)[c] / self.category_probs(f, 0)[c]).ln())
            })
            .sum();
        num + cat
    }
}

/// Exactly `round(positive_fraction * n_rows)` positives, placed at random.
pub fn generate_synthetic_table(spec: &SyntheticSpec) -> Result<RawTable> {
    spec.validate()?;
    let mut labels = vec![0u8; spec.n_rows];
    labels[..spec.n_positive()].fill(1);
    labels.shuffle(&mut derived_rng(spec.seed, &[LABEL_STREAM]));
    let cum: Vec<[Vec<f64>; 2]> = (0..spec.n_categorical)
        .map(|f| {
            [0u8, 1].map(|l| {
                spec.category_probs(f, l)
                    .iter()
                    .scan(0.0, |acc, p| {
                        *acc += p;
                        Some(*acc)
                    })
                    .collect()
            })
        })
        .collect();
    let rows = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let mut rng = derived_rng(spec.seed, &[ROW_STREAM, i as u64]);
            let mut row = Vec::with_capacity(spec.n_numeric + spec.n_categorical + 1);
            for j in 0..spec.n_numeric {
                let shift = if y == 1 { spec.numeric_shift(j) } else { 0.0 };
                row.push(Some(format!("{:.6}", standard_normal(&mut rng) + shift)));
            }
            for c in &cum {
                let u: f64 = rng.random();
                let missing = rng.random::<f64>() < spec.missing_fraction;
                let cat = c[y as usize]
                    .iter()
                    .position(|&p| u < p)
                    .unwrap_or(spec.n_categories - 1);
                row.push((!missing).then(|| SyntheticSpec::category_name(cat)));
            }
            row.push(Some(y.to_string()));
            row
        })
        .collect();
    RawTable::new(spec.column_names(), rows)
}

/// Encoded dataset of [`generate_synthetic_table`], standardized on all rows.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    let table = generate_synthetic_table(spec)?;
    let schema = fit_schema(&table, SYNTHETIC_TARGET)?;
    encode(&table, &schema)
}
