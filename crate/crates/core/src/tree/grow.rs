//! Exact greedy tree growth, one depth level at a time.
//!
//! Every feature is sorted once. A level is searched by walking each sorted
//! feature a single time while routing rows to the open node that holds
//! them, so no per-node lists are built. Rows may carry a multiplicity
//! (bootstrap draws); every occurrence counts once. Nodes are stored in
//! breadth-first order.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::rng::Rng;

/// Node of a fitted tree. Rows with `x[feature] < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Objective improvement of this split (weighted impurity decrease
        /// or boosting gain).
        gain: f64,
        n_samples: usize,
    },
    Leaf {
        n_samples: usize,
        /// Prediction at this leaf: positive-class share or boosting weight.
        value: f64,
        /// Summed row statistics: class masses `[neg, pos]` or `[G, H]`.
        stats: [f64; 2],
    },
}

/// Flat node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if row[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                TreeNode::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(row)] {
            TreeNode::Leaf { value, .. } => *value,
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Split features in node order.
    pub fn split_features(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .collect()
    }

    pub(crate) fn gain_by_feature(&self, n_features: usize) -> Vec<f64> {
        let mut g = vec![0.0; n_features];
        for n in &self.nodes {
            if let TreeNode::Split { feature, gain, .. } = n {
                g[*feature] += gain;
            }
        }
        g
    }
}

/// Split quality in terms of summed two-component row statistics.
pub(crate) trait SplitObjective {
    /// Node score; a split's gain is `score(L) + score(R) - score(parent)`.
    fn score(&self, a: f64, b: f64) -> f64;
    fn child_allowed(&self, count: usize, a: f64, b: f64) -> bool;
    fn leaf_value(&self, a: f64, b: f64) -> f64;
}

pub(crate) struct GrowConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: usize,
}

/// Per-feature `(value, row)` pairs sorted by value, ties by row id. Built
/// once per training call and shared by every tree grown on the matrix.
pub(crate) struct Presorted<'a> {
    x: &'a Matrix,
    sorted: Vec<Vec<(f64, u32)>>,
}

impl<'a> Presorted<'a> {
    pub fn new(x: &'a Matrix) -> Self {
        let sorted = (0..x.n_cols())
            .map(|f| {
                let mut pairs: Vec<(f64, u32)> =
                    x.column(f).into_iter().zip(0..x.n_rows() as u32).collect();
                pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                pairs
            })
            .collect();
        Presorted { x, sorted }
    }

    pub fn n_features(&self) -> usize {
        self.sorted.len()
    }
}

const CLOSED: u32 = u32::MAX;
const MIN_RELATIVE_GAIN: f64 = 1e-12;

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Running left-side sums of one open node during a feature walk.
struct Scan {
    la: f64,
    lb: f64,
    count: usize,
    last: f64,
    best: Option<Best>,
}

#[derive(Clone, Copy)]
struct Totals {
    n: usize,
    a: f64,
    b: f64,
}

/// Grows a tree where row `r` carries `stats[r]` and occurs `counts[r]`
/// times (once when `counts` is `None`).
pub(crate) fn grow<O: SplitObjective>(
    presorted: &Presorted,
    stats: &[[f64; 2]],
    counts: Option<&[u32]>,
    config: &GrowConfig,
    objective: &O,
    rng: &mut Rng,
) -> Tree {
    let d = presorted.n_features();
    let n_rows = presorted.x.n_rows();
    let mult = |r: usize| counts.map_or(1, |c| c[r]);
    let stops = |t: &Totals, depth: usize| {
        config.max_depth.is_some_and(|m| depth >= m) || t.n < config.min_samples_split
    };
    let leaf = |t: &Totals| TreeNode::Leaf {
        n_samples: t.n,
        value: objective.leaf_value(t.a, t.b),
        stats: [t.a, t.b],
    };

    // Open-node slot of every row at the current level.
    let mut slot_of: Vec<u32> = (0..n_rows)
        .map(|r| if mult(r) > 0 { 0 } else { CLOSED })
        .collect();
    let mut level_nodes = vec![0usize];
    let mut totals = tally(&presorted.sorted[0], stats, counts, &slot_of, 1);
    let mut nodes = vec![leaf(&totals[0])];
    // Sorted lists restricted to live rows, rebuilt once most rows are closed.
    let mut compacted: Option<Vec<Vec<(f64, u32)>>> = None;

    for depth in 0.. {
        let sorted: &[Vec<(f64, u32)>] = compacted.as_deref().unwrap_or(&presorted.sorted);
        let n_slots = level_nodes.len();
        let mut uses = vec![false; n_slots * d];
        let mut any_open = false;
        for (s, t) in totals.iter().enumerate() {
            if stops(t, depth) {
                continue;
            }
            any_open = true;
            for f in candidate_features(d, config.max_features, rng) {
                uses[s * d + f] = true;
            }
        }
        if !any_open {
            break;
        }

        let mut scans: Vec<Scan> = (0..n_slots)
            .map(|_| Scan {
                la: 0.0,
                lb: 0.0,
                count: 0,
                last: 0.0,
                best: None,
            })
            .collect();
        let parents: Vec<f64> = totals.iter().map(|t| objective.score(t.a, t.b)).collect();
        for f in 0..d {
            if !(0..n_slots).any(|s| uses[s * d + f]) {
                continue;
            }
            for sc in scans.iter_mut() {
                sc.la = 0.0;
                sc.lb = 0.0;
                sc.count = 0;
            }
            for &(v, row) in &sorted[f] {
                let s = slot_of[row as usize];
                if s == CLOSED || !uses[s as usize * d + f] {
                    continue;
                }
                let s = s as usize;
                let [a, b] = stats[row as usize];
                let (t, parent, sc) = (&totals[s], parents[s], &mut scans[s]);
                for _ in 0..mult(row as usize) {
                    if sc.count > 0 && sc.last < v {
                        consider(sc, objective, t, parent, f, v);
                    }
                    sc.la += a;
                    sc.lb += b;
                    sc.count += 1;
                    sc.last = v;
                }
            }
        }

        // Route rows of split nodes to their children's slots.
        let mut routes: Vec<Option<(usize, f64, u32)>> = vec![None; n_slots];
        let mut next_nodes = Vec::new();
        let mut splits = Vec::new();
        for (s, sc) in scans.into_iter().enumerate() {
            let floor = MIN_RELATIVE_GAIN * (1.0 + parents[s].abs());
            if let Some(best) = sc.best.filter(|b| b.gain > floor) {
                routes[s] = Some((best.feature, best.threshold, next_nodes.len() as u32));
                let left = nodes.len() + 2 * splits.len();
                next_nodes.extend([left, left + 1]);
                splits.push((s, best, left));
            }
        }
        if splits.is_empty() {
            break;
        }
        let mut live = 0;
        for (r, slot) in slot_of.iter_mut().enumerate() {
            if *slot == CLOSED {
                continue;
            }
            *slot = match routes[*slot as usize] {
                Some((f, thr, left)) => {
                    live += 1;
                    left + u32::from(presorted.x.get(r, f) >= thr)
                }
                None => CLOSED,
            };
        }
        let child_totals = tally(&sorted[0], stats, counts, &slot_of, next_nodes.len());
        if 2 * live < sorted[0].len() {
            let kept = sorted
                .iter()
                .map(|list| {
                    list.iter()
                        .copied()
                        .filter(|&(_, r)| slot_of[r as usize] != CLOSED)
                        .collect()
                })
                .collect();
            compacted = Some(kept);
        }
        for (s, best, left) in splits {
            nodes[level_nodes[s]] = TreeNode::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right: left + 1,
                gain: best.gain,
                n_samples: totals[s].n,
            };
        }
        nodes.extend(child_totals.iter().map(leaf));
        level_nodes = next_nodes;
        totals = child_totals;
    }
    Tree { nodes }
}

/// Totals of every slot, summed in the order of `order`.
fn tally(
    order: &[(f64, u32)],
    stats: &[[f64; 2]],
    counts: Option<&[u32]>,
    slot_of: &[u32],
    n_slots: usize,
) -> Vec<Totals> {
    let mut t = vec![
        Totals {
            n: 0,
            a: 0.0,
            b: 0.0
        };
        n_slots
    ];
    for &(_, row) in order {
        let s = slot_of[row as usize];
        if s == CLOSED {
            continue;
        }
        let [a, b] = stats[row as usize];
        let tt = &mut t[s as usize];
        for _ in 0..counts.map_or(1, |c| c[row as usize]) {
            tt.n += 1;
            tt.a += a;
            tt.b += b;
        }
    }
    t
}

/// Evaluates the boundary just below value `v`, with the scan's sums
/// covering every occurrence whose value is at most `sc.last`.
fn consider<O: SplitObjective>(
    sc: &mut Scan,
    objective: &O,
    t: &Totals,
    parent: f64,
    f: usize,
    v: f64,
) {
    let lc = sc.count;
    let (la, lb) = (sc.la, sc.lb);
    let (ra, rb) = (t.a - la, t.b - lb);
    if !objective.child_allowed(lc, la, lb) || !objective.child_allowed(t.n - lc, ra, rb) {
        return;
    }
    let gain = objective.score(la, lb) + objective.score(ra, rb) - parent;
    if sc.best.as_ref().is_none_or(|b| gain > b.gain) {
        let last = sc.last;
        let mut threshold = last + (v - last) / 2.0;
        if threshold <= last {
            threshold = v;
        }
        sc.best = Some(Best {
            feature: f,
            threshold,
            gain,
        });
    }
}

fn candidate_features(d: usize, max_features: usize, rng: &mut Rng) -> Vec<usize> {
    if max_features >= d {
        return (0..d).collect();
    }
    let mut f = sample(rng, d, max_features).into_vec();
    f.sort_unstable();
    f
}
