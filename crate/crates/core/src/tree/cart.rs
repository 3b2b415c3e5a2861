use serde::{Deserialize, Serialize};

use super::grow::{grow, GrowConfig, Presorted, SplitObjective, Tree};
use super::{check_training_input, check_width, Criterion, TreeParams};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::resample::ClassWeights;
use crate::rng::{rng_from_seed, Rng};

/// Rows carry class masses `[w * (y == 0), w * (y == 1)]`.
pub(crate) struct Impurity {
    pub criterion: Criterion,
    pub min_samples_leaf: usize,
}

impl SplitObjective for Impurity {
    fn score(&self, a: f64, b: f64) -> f64 {
        -(a + b) * self.criterion.impurity(a, b)
    }

    fn child_allowed(&self, count: usize, _a: f64, _b: f64) -> bool {
        count >= self.min_samples_leaf
    }

    fn leaf_value(&self, a: f64, b: f64) -> f64 {
        if a + b > 0.0 {
            b / (a + b)
        } else {
            0.5
        }
    }
}

/// CART classifier whose leaves hold class-weighted masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub params: TreeParams,
    pub tree: Tree,
}

pub(crate) fn class_mass(y: &[u8], weights: &ClassWeights) -> Vec<[f64; 2]> {
    y.iter()
        .map(|&l| {
            let w = weights.of(l);
            if l == 1 {
                [0.0, w]
            } else {
                [w, 0.0]
            }
        })
        .collect()
}

/// Grows one tree in which row `r` of the presorted matrix occurs
/// `counts[r]` times (once each when `counts` is `None`).
pub(crate) fn fit_rows(
    presorted: &Presorted,
    mass: &[[f64; 2]],
    counts: Option<&[u32]>,
    params: &TreeParams,
    rng: &mut Rng,
) -> DecisionTree {
    let n_features = presorted.n_features();
    let config = GrowConfig {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split.max(2 * params.min_samples_leaf),
        max_features: params.max_features.count(n_features),
    };
    let objective = Impurity {
        criterion: params.criterion,
        min_samples_leaf: params.min_samples_leaf,
    };
    let tree = grow(presorted, mass, counts, &config, &objective, rng);
    DecisionTree {
        n_features,
        params: *params,
        tree,
    }
}

/// Greedy CART on all rows of `x`. Split candidates are midpoints between
/// consecutive distinct values; ties resolve to the lowest feature, then the
/// lowest threshold. `seed` drives per-split feature subsampling.
pub fn train_tree(
    x: &Matrix,
    y: &[u8],
    weights: &ClassWeights,
    params: &TreeParams,
    seed: u64,
) -> Result<DecisionTree> {
    check_training_input(x, y)?;
    params.validate(x.n_rows())?;
    let mass = class_mass(y, weights);
    Ok(fit_rows(
        &Presorted::new(x),
        &mass,
        None,
        params,
        &mut rng_from_seed(seed),
    ))
}

impl DecisionTree {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_width(self.n_features, x)?;
        Ok(x.rows_iter().map(|r| self.tree.predict_row(r)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::tree::{MaxFeatures, TreeNode};
    use rand::Rng as _;

    /// Exhaustive search over every (feature, midpoint) pair.
    fn brute_force_best(
        x: &Matrix,
        y: &[u8],
        w: &ClassWeights,
        criterion: Criterion,
    ) -> Option<(usize, f64, f64)> {
        let mass = |rows: &[usize]| {
            rows.iter().fold((0.0, 0.0), |(a, b), &r| {
                if y[r] == 1 {
                    (a, b + w.positive)
                } else {
                    (a + w.negative, b)
                }
            })
        };
        let all: Vec<usize> = (0..y.len()).collect();
        let (pa, pb) = mass(&all);
        let parent = (pa + pb) * criterion.impurity(pa, pb);
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..x.n_cols() {
            let mut vals: Vec<f64> = x.column(f);
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for pair in vals.windows(2) {
                let thr = (pair[0] + pair[1]) / 2.0;
                let (l, r): (Vec<usize>, Vec<usize>) =
                    all.iter().partition(|&&i| x.get(i, f) < thr);
                let (la, lb) = mass(&l);
                let (ra, rb) = mass(&r);
                let gain = parent
                    - (la + lb) * criterion.impurity(la, lb)
                    - (ra + rb) * criterion.impurity(ra, rb);
                if best.is_none_or(|b| gain > b.2) {
                    best = Some((f, thr, gain));
                }
            }
        }
        best
    }

    fn oracle_gain_of(
        x: &Matrix,
        y: &[u8],
        w: &ClassWeights,
        c: Criterion,
        f: usize,
        thr: f64,
    ) -> f64 {
        let mut m = [[0.0; 2]; 2];
        for i in 0..y.len() {
            let side = usize::from(x.get(i, f) >= thr);
            m[side][y[i] as usize] += w.of(y[i]);
        }
        let imp = |a: f64, b: f64| (a + b) * c.impurity(a, b);
        imp(m[0][0] + m[1][0], m[0][1] + m[1][1]) - imp(m[0][0], m[0][1]) - imp(m[1][0], m[1][1])
    }

    #[test]
    fn root_split_matches_exhaustive_search() {
        let mut rng = rng_from_seed(2024);
        let mut checked = 0;
        for case in 0..200 {
            let n = rng.random_range(2..=12);
            let d = rng.random_range(1..=3);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..d)
                        .map(|_| rng.random_range(0..6) as f64 / 2.0)
                        .collect()
                })
                .collect();
            let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let x = Matrix::from_rows(&rows);
            let w = if case % 2 == 0 {
                ClassWeights::UNIT
            } else {
                ClassWeights::new(0.6, 2.5).unwrap()
            };
            let criterion = if case % 3 == 0 {
                Criterion::Entropy
            } else {
                Criterion::Gini
            };
            let params = TreeParams {
                criterion,
                max_depth: Some(1),
                ..Default::default()
            };
            let t = train_tree(&x, &y, &w, &params, 0).unwrap();
            let oracle = brute_force_best(&x, &y, &w, criterion);
            match (&t.tree.nodes[0], oracle) {
                (
                    TreeNode::Split {
                        feature,
                        threshold,
                        gain,
                        ..
                    },
                    Some((_, _, best)),
                ) => {
                    assert!((gain - best).abs() < 1e-9, "case {case}");
                    let g = oracle_gain_of(&x, &y, &w, criterion, *feature, *threshold);
                    assert!((g - best).abs() < 1e-9, "case {case}");
                    checked += 1;
                }
                (TreeNode::Leaf { .. }, None) => {}
                (TreeNode::Leaf { .. }, Some((_, _, best))) => assert!(best <= 1e-9, "case {case}"),
                (TreeNode::Split { .. }, None) => panic!("case {case}: split without candidates"),
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn pure_node_is_leaf() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]);
        let t = train_tree(
            &x,
            &[1, 1, 1],
            &ClassWeights::UNIT,
            &TreeParams::default(),
            0,
        )
        .unwrap();
        assert_eq!(t.tree.nodes.len(), 1);
        assert_eq!(t.predict_proba(&x).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn depth_zero_gives_positive_share() {
        let x = Matrix::from_rows(&(0..10).map(|i| [i as f64]).collect::<Vec<_>>());
        let y: Vec<u8> = (0..10).map(|i| u8::from(i < 3)).collect();
        let params = TreeParams {
            max_depth: Some(0),
            ..Default::default()
        };
        let t = train_tree(&x, &y, &ClassWeights::UNIT, &params, 0).unwrap();
        for p in t.predict_proba(&x).unwrap() {
            assert!((p - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // both columns separate perfectly
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]]);
        let t = train_tree(
            &x,
            &[0, 0, 1, 1],
            &ClassWeights::UNIT,
            &TreeParams::default(),
            0,
        )
        .unwrap();
        assert!(
            matches!(t.tree.nodes[0], TreeNode::Split { feature: 0, threshold, .. } if threshold == 0.5)
        );
    }

    #[test]
    fn weights_shift_leaf_probabilities() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [0.0], [0.0]]);
        let w = ClassWeights::new(1.0, 3.0).unwrap();
        let t = train_tree(&x, &[1, 0, 0, 0], &w, &TreeParams::default(), 0).unwrap();
        assert_eq!(t.predict_proba(&x).unwrap()[0], 0.5);
    }

    #[test]
    fn structural_limits_respected() {
        let mut rng = rng_from_seed(5);
        let rows: Vec<[f64; 3]> = (0..300)
            .map(|_| [rng.random(), rng.random(), rng.random_range(0..4) as f64])
            .collect();
        let y: Vec<u8> = rows
            .iter()
            .map(|r| u8::from(r[0] + 0.3 * rng.random::<f64>() > 0.6))
            .collect();
        let x = Matrix::from_rows(&rows);
        for depth in [Some(5), Some(15), None] {
            for split in [2, 9, 16] {
                for leaf in [1, 8, 15] {
                    for mf in [MaxFeatures::Sqrt, MaxFeatures::Log2, MaxFeatures::All] {
                        let p = TreeParams {
                            criterion: Criterion::Gini,
                            max_depth: depth,
                            min_samples_split: split,
                            min_samples_leaf: leaf,
                            max_features: mf,
                        };
                        let t = train_tree(&x, &y, &ClassWeights::UNIT, &p, 3).unwrap();
                        if let Some(d) = depth {
                            assert!(t.tree.depth() <= d);
                        }
                        for node in &t.tree.nodes {
                            match node {
                                TreeNode::Split { n_samples, .. } => assert!(*n_samples >= split),
                                TreeNode::Leaf { n_samples, .. } => assert!(*n_samples >= leaf),
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_transform_keeps_topology() {
        let mut rng = rng_from_seed(8);
        let rows: Vec<[f64; 2]> = (0..200)
            .map(|_| [rng.random_range(-2.0..2.0), rng.random()])
            .collect();
        let y: Vec<u8> = rows
            .iter()
            .map(|r| u8::from(r[0] > 0.3 || r[1] > 0.8))
            .collect();
        let x = Matrix::from_rows(&rows);
        let tx = Matrix::from_rows(
            &rows
                .iter()
                .map(|r| [r[0].exp() * 3.0 + 1.0, r[1]])
                .collect::<Vec<_>>(),
        );
        let p = TreeParams {
            max_depth: Some(4),
            ..Default::default()
        };
        let a = train_tree(&x, &y, &ClassWeights::UNIT, &p, 0).unwrap();
        let b = train_tree(&tx, &y, &ClassWeights::UNIT, &p, 0).unwrap();
        assert_eq!(a.tree.split_features(), b.tree.split_features());
    }

    #[test]
    fn errors() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]);
        assert!(matches!(
            train_tree(
                &Matrix::zeros(0, 1),
                &[],
                &ClassWeights::UNIT,
                &TreeParams::default(),
                0
            ),
            Err(Error::EmptyTable)
        ));
        let p = TreeParams {
            min_samples_leaf: 3,
            ..Default::default()
        };
        assert!(matches!(
            train_tree(&x, &[0, 1], &ClassWeights::UNIT, &p, 0),
            Err(Error::InvalidParameter(_))
        ));
        let t = train_tree(&x, &[0, 1], &ClassWeights::UNIT, &TreeParams::default(), 0).unwrap();
        assert!(matches!(
            t.predict_proba(&Matrix::zeros(1, 2)),
            Err(Error::WidthMismatch { .. })
        ));
    }

    #[test]
    fn deterministic_with_feature_subsampling() {
        let mut rng = rng_from_seed(1);
        let rows: Vec<[f64; 6]> = (0..150)
            .map(|_| std::array::from_fn(|_| rng.random()))
            .collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r[2] + r[4] > 1.0)).collect();
        let x = Matrix::from_rows(&rows);
        let p = TreeParams {
            max_features: MaxFeatures::Sqrt,
            ..Default::default()
        };
        let a = train_tree(&x, &y, &ClassWeights::UNIT, &p, 77).unwrap();
        let b = train_tree(&x, &y, &ClassWeights::UNIT, &p, 77).unwrap();
        assert_eq!(a, b);
    }
}
