use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::derived_rng;

/// `k` disjoint, sorted validation folds covering `0..labels.len()`.
///
/// Each class is shuffled separately and dealt round-robin; the dealing
/// position carries over from one class to the next, so fold sizes differ by
/// at most one overall and per class. Every class needs at least `k` rows,
/// except for leave-one-out (`k == labels.len()`).
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must lie in [2, {n}], got {k}"
        )));
    }
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        if rows.len() < k && k != n {
            return Err(Error::ClassTooSmall {
                class,
                count: rows.len(),
                needed: k,
            });
        }
        rows.shuffle(&mut derived_rng(seed, &[u64::from(class)]));
        for (i, &r) in rows.iter().enumerate() {
            folds[(offset + i) % k].push(r);
        }
        offset = (offset + rows.len()) % k;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
