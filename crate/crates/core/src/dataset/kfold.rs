use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// A shuffled partition of row indices into `k` near-equal folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KFoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl KFoldPlan {
    pub fn n_rows(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Every row outside `fold`, in fold order.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect()
    }
}

/// Shuffle `0..n_rows` and cut it into `k` folds; the first `n_rows % k`
/// folds hold one extra row.
pub fn make_kfold(n_rows: usize, k: usize, seed: u64) -> Result<KFoldPlan> {
    if k < 2 {
        return Err(Error::validation(format!("k must be at least 2, got {k}")));
    }
    if k > n_rows {
        return Err(Error::validation(format!(
            "cannot split {n_rows} rows into {k} folds"
        )));
    }
    let mut idx: Vec<usize> = (0..n_rows).collect();
    idx.shuffle(&mut seed::rng_for(seed, "kfold", 0));
    let base = n_rows / k;
    let extra = n_rows % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(KFoldPlan { k, folds, seed })
}
