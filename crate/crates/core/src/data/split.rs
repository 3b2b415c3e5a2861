use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derived_rng;

/// Disjoint train/test row indices (each sorted ascending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
}

/// Per-class shuffled split: class `c` contributes `round(test_fraction * n_c)`
/// rows to the test side.
pub fn stratified_split(labels: &[u8], test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let n = rows.len();
        let n_test = (test_fraction * n as f64).round() as usize;
        if n < 2 || n_test == 0 || n_test >= n {
            return Err(Error::ClassTooSmall {
                class,
                count: n,
                needed: 2.max((0.5 / test_fraction.min(1.0 - test_fraction)).ceil() as usize),
            });
        }
        rows.shuffle(&mut derived_rng(seed, &[class as u64]));
        test_rows.extend_from_slice(&rows[..n_test]);
        train_rows.extend_from_slice(&rows[n_test..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitIndices {
        train_rows,
        test_rows,
        seed,
    })
}
