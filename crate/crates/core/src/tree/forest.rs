use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{class_mass, fit_rows, DecisionTree};
use super::grow::Presorted;
use super::{check_training_input, check_width, MaxFeatures, TreeParams};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::resample::ClassWeights;
use crate::rng::{derive_seed, derived_rng, rng_from_seed};

const BOOTSTRAP_STREAM: u64 = 0xB007;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_estimators: usize,
    #[serde(flatten)]
    pub tree: TreeParams,
    /// Draw N rows with replacement per tree; off only for testing.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 100,
            tree: TreeParams {
                max_features: MaxFeatures::Sqrt,
                ..TreeParams::default()
            },
            bootstrap: true,
        }
    }
}

/// Bagged CART ensemble; probability is the mean of leaf positive shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
    /// Seed of tree `t`, derived from the forest seed and `t`.
    pub tree_seeds: Vec<u64>,
}

pub fn train_forest(
    x: &Matrix,
    y: &[u8],
    weights: &ClassWeights,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    check_training_input(x, y)?;
    params.tree.validate(x.n_rows())?;
    if params.n_estimators == 0 {
        return Err(crate::Error::InvalidParameter(
            "n_estimators must be >= 1".into(),
        ));
    }
    let n = x.n_rows();
    let mass = class_mass(y, weights);
    let tree_seeds: Vec<u64> = (0..params.n_estimators as u64)
        .map(|t| derive_seed(seed, &[t]))
        .collect();
    let presorted = Presorted::new(x);
    let trees = tree_seeds
        .par_iter()
        .map(|&ts| {
            let counts = params.bootstrap.then(|| {
                let mut rng = derived_rng(ts, &[BOOTSTRAP_STREAM]);
                let mut c = vec![0u32; n];
                for _ in 0..n {
                    c[rng.random_range(0..n as u32) as usize] += 1;
                }
                c
            });
            fit_rows(
                &presorted,
                &mass,
                counts.as_deref(),
                &params.tree,
                &mut rng_from_seed(ts),
            )
        })
        .collect();
    Ok(ForestModel {
        n_features: x.n_cols(),
        trees,
        tree_seeds,
    })
}

impl ForestModel {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_width(self.n_features, x)?;
        let k = self.trees.len() as f64;
        Ok(x.rows_iter()
            .map(|r| {
                self.trees
                    .iter()
                    .map(|t| t.tree.predict_row(r))
                    .sum::<f64>()
                    / k
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::roc_auc;
    use crate::rng::standard_normal;
    use crate::tree::train_tree;

    fn noisy(seed: u64, n: usize) -> (Matrix, Vec<u8>) {
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let r: [f64; 5] = std::array::from_fn(|_| standard_normal(&mut rng));
            let z = r[0] + 0.7 * r[1] - 0.5 * r[2] * r[3] + 1.2 * standard_normal(&mut rng);
            y.push(u8::from(z > 1.0));
            rows.push(r);
        }
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn single_tree_without_bootstrap_reduces_to_train_tree() {
        let (x, y) = noisy(1, 200);
        let params = ForestParams {
            n_estimators: 1,
            bootstrap: false,
            ..Default::default()
        };
        let f = train_forest(&x, &y, &ClassWeights::UNIT, &params, 9).unwrap();
        let t = train_tree(&x, &y, &ClassWeights::UNIT, &params.tree, f.tree_seeds[0]).unwrap();
        assert_eq!(f.trees[0], t);
        assert_eq!(f.predict_proba(&x).unwrap(), t.predict_proba(&x).unwrap());
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = noisy(2, 150);
        let params = ForestParams {
            n_estimators: 8,
            ..Default::default()
        };
        let a = train_forest(&x, &y, &ClassWeights::UNIT, &params, 4).unwrap();
        let b = train_forest(&x, &y, &ClassWeights::UNIT, &params, 4).unwrap();
        assert_eq!(a, b);
        let c = train_forest(&x, &y, &ClassWeights::UNIT, &params, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn forest_of_identical_stumps_matches_one_stump() {
        let (x, y) = noisy(3, 100);
        let params = ForestParams {
            n_estimators: 4,
            bootstrap: false,
            tree: TreeParams {
                max_depth: Some(1),
                ..Default::default()
            },
        };
        let f = train_forest(&x, &y, &ClassWeights::UNIT, &params, 0).unwrap();
        let one = f.trees[0].predict_proba(&x).unwrap();
        for (a, b) in f.predict_proba(&x).unwrap().iter().zip(&one) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn forest_beats_single_tree_on_noisy_task() {
        let (x, y) = noisy(10, 1500);
        let (xt, yt) = noisy(11, 1500);
        let forest =
            train_forest(&x, &y, &ClassWeights::UNIT, &ForestParams::default(), 1).unwrap();
        let tree = train_tree(&x, &y, &ClassWeights::UNIT, &TreeParams::default(), 1).unwrap();
        let fa = roc_auc(&yt, &forest.predict_proba(&xt).unwrap()).unwrap();
        let ta = roc_auc(&yt, &tree.predict_proba(&xt).unwrap()).unwrap();
        assert!(fa >= ta, "forest {fa} tree {ta}");
    }

    #[test]
    fn bootstrap_draws_n_rows() {
        let (x, y) = noisy(4, 50);
        let params = ForestParams {
            n_estimators: 3,
            ..Default::default()
        };
        let f = train_forest(&x, &y, &ClassWeights::UNIT, &params, 0).unwrap();
        for t in &f.trees {
            match &t.tree.nodes[0] {
                crate::tree::TreeNode::Split { n_samples, .. }
                | crate::tree::TreeNode::Leaf { n_samples, .. } => assert_eq!(*n_samples, 50),
            }
        }
    }
}
