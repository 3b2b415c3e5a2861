//! Split-gain feature importance.
//!
//! Tree and forest importances sum weighted impurity decrease over splits
//! (forest: per-tree normalized, then averaged); boosted importances sum
//! split gain. Values are normalized to 1 unless no split exists, in which
//! case the vector is all zeros and flagged degenerate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{BoostedModel, DecisionTree, ForestModel};
use crate::data::FeatureGroup;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub degenerate: bool,
}

fn normalized(raw: Vec<f64>) -> (Vec<f64>, bool) {
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        (raw.into_iter().map(|v| v / total).collect(), false)
    } else {
        (vec![0.0; raw.len()], true)
    }
}

impl FeatureImportance {
    fn from_raw(raw: Vec<f64>, names: &[String]) -> Self {
        let (values, degenerate) = normalized(raw);
        let names = if names.len() == values.len() {
            names.to_vec()
        } else {
            (0..values.len()).map(|j| format!("x{j}")).collect()
        };
        FeatureImportance {
            names,
            values,
            degenerate,
        }
    }

    pub fn of_tree(model: &DecisionTree, names: &[String]) -> Self {
        Self::from_raw(model.tree.gain_by_feature(model.n_features), names)
    }

    pub fn of_forest(model: &ForestModel, names: &[String]) -> Self {
        let mut acc = vec![0.0; model.n_features];
        for t in &model.trees {
            let (v, _) = normalized(t.tree.gain_by_feature(model.n_features));
            for (a, b) in acc.iter_mut().zip(v) {
                *a += b;
            }
        }
        Self::from_raw(acc, names)
    }

    pub fn of_boosted(model: &BoostedModel, names: &[String]) -> Self {
        let mut acc = vec![0.0; model.n_features];
        for t in &model.trees {
            for (a, b) in acc.iter_mut().zip(t.gain_by_feature(model.n_features)) {
                *a += b;
            }
        }
        Self::from_raw(acc, names)
    }

    /// Sums one-hot members back onto their source columns.
    pub fn rollup(&self, groups: &[FeatureGroup]) -> FeatureImportance {
        FeatureImportance {
            names: groups.iter().map(|g| g.source.clone()).collect(),
            values: groups
                .iter()
                .map(|g| self.values[g.start..g.start + g.len].iter().sum())
                .collect(),
            degenerate: self.degenerate,
        }
    }

    /// `(name, value)` pairs by descending importance, ties by name.
    pub fn sorted(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self
            .names
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,importance\n");
        for (name, v) in self.sorted() {
            let _ = writeln!(s, "{},{}", csv_field(name), v);
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::resample::ClassWeights;
    use crate::rng::rng_from_seed;
    use crate::tree::{
        train_boosted, train_forest, train_tree, BoostParams, ForestParams, TreeParams,
    };
    use rand::Rng as _;

    #[test]
    fn single_split_puts_all_mass_on_its_feature() {
        let x = Matrix::from_rows(&[[0.0, 5.0], [0.0, 1.0], [1.0, 5.0], [1.0, 2.0]]);
        let t = train_tree(
            &x,
            &[0, 0, 1, 1],
            &ClassWeights::UNIT,
            &TreeParams::default(),
            0,
        )
        .unwrap();
        let imp = FeatureImportance::of_tree(&t, &["a".into(), "b".into()]);
        assert_eq!(imp.values, vec![1.0, 0.0]);
        assert!(!imp.degenerate);
    }

    #[test]
    fn no_split_is_degenerate() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]);
        let t = train_tree(&x, &[1, 1], &ClassWeights::UNIT, &TreeParams::default(), 0).unwrap();
        let imp = FeatureImportance::of_tree(&t, &[]);
        assert!(imp.degenerate);
        assert_eq!(imp.values, vec![0.0]);
    }

    #[test]
    fn indicator_feature_dominates_after_rollup() {
        let mut rng = rng_from_seed(3);
        // column group "flag" = one-hot pair (cols 0, 1); cols 2..5 noise
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..600 {
            let flag = rng.random::<bool>();
            let mut r = vec![f64::from(u8::from(flag)), f64::from(u8::from(!flag))];
            r.extend((0..3).map(|_| rng.random::<f64>()));
            rows.push(r);
            y.push(u8::from(flag));
        }
        let x = Matrix::from_rows(&rows);
        let groups = vec![
            FeatureGroup {
                source: "flag".into(),
                start: 0,
                len: 2,
            },
            FeatureGroup {
                source: "n0".into(),
                start: 2,
                len: 1,
            },
            FeatureGroup {
                source: "n1".into(),
                start: 3,
                len: 1,
            },
            FeatureGroup {
                source: "n2".into(),
                start: 4,
                len: 1,
            },
        ];
        let forest = train_forest(
            &x,
            &y,
            &ClassWeights::UNIT,
            &ForestParams {
                n_estimators: 20,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        let imp = FeatureImportance::of_forest(&forest, &[]).rollup(&groups);
        assert_eq!(imp.names[0], "flag");
        assert!(imp.values[0] > 0.9, "{:?}", imp.values);
        let boosted = train_boosted(
            &x,
            &y,
            &BoostParams {
                n_estimators: 10,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        assert!(
            FeatureImportance::of_boosted(&boosted, &[])
                .rollup(&groups)
                .values[0]
                > 0.9
        );
    }

    #[test]
    fn forest_importances_sum_to_one() {
        for seed in 0..5 {
            let mut rng = rng_from_seed(seed);
            let rows: Vec<[f64; 4]> = (0..120)
                .map(|_| std::array::from_fn(|_| rng.random()))
                .collect();
            let y: Vec<u8> = (0..120).map(|_| rng.random_range(0..2)).collect();
            let f = train_forest(
                &Matrix::from_rows(&rows),
                &y,
                &ClassWeights::UNIT,
                &ForestParams {
                    n_estimators: 10,
                    ..Default::default()
                },
                seed,
            )
            .unwrap();
            let imp = FeatureImportance::of_forest(&f, &[]);
            assert!((imp.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(imp.values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn csv_sorted_descending() {
        let imp = FeatureImportance {
            names: vec!["a".into(), "b,c".into()],
            values: vec![0.25, 0.75],
            degenerate: false,
        };
        assert_eq!(imp.to_csv(), "feature,importance\n\"b,c\",0.75\na,0.25\n");
    }
}
