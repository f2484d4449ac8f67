use rand::seq::index;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::observed::SparseMatrix;
use crate::rng::{self, child_seed, streams};

/// Fraction of entries held out per Monte-Carlo round unless configured.
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

/// One train/test partition of the entry ids of a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    /// Sorted ids of training entries.
    pub train: Vec<usize>,
    /// Sorted ids of test entries.
    pub test: Vec<usize>,
    pub round_id: usize,
}

impl SplitPlan {
    fn from_test(n_entries: usize, mut test: Vec<usize>, round_id: usize) -> Self {
        test.sort_unstable();
        let mut is_test = vec![false; n_entries];
        test.iter().for_each(|&i| is_test[i] = true);
        let train = (0..n_entries).filter(|&i| !is_test[i]).collect();
        SplitPlan { train, test, round_id }
    }
}

/// `rounds` independent splits, each holding out `ceil(test_fraction * |Omega|)`
/// entries sampled uniformly without replacement.
pub fn split_monte_carlo(observed: &SparseMatrix, rounds: usize, test_fraction: f64, seed: u64) -> Result<Vec<SplitPlan>> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction must be in (0, 1), got {test_fraction}")));
    }
    if rounds == 0 {
        return Err(Error::InvalidArgument("at least one round is required".into()));
    }
    let total = observed.len();
    if total == 0 {
        return Err(Error::EmptyInput("cannot split an empty matrix".into()));
    }
    let size = ((test_fraction * total as f64).ceil() as usize).clamp(1, total);
    Ok((0..rounds)
        .map(|r| {
            let mut rng = rng::stream(child_seed(seed, r as u64), streams::SPLIT);
            let test = index::sample(&mut rng, total, size).into_vec();
            SplitPlan::from_test(total, test, r)
        })
        .collect())
}

/// `k` folds of a random permutation; the first `|Omega| mod k` folds get one
/// extra entry. Plan `i` tests on fold `i`.
pub fn split_kfold(observed: &SparseMatrix, k: usize, seed: u64) -> Result<Vec<SplitPlan>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k-fold needs k >= 2, got {k}")));
    }
    let total = observed.len();
    if total < k {
        return Err(Error::InvalidArgument(format!("{total} entries cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng::stream(seed, streams::SPLIT));
    let (base, extra) = (total / k, total % k);
    let mut start = 0;
    Ok((0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let fold = order[start..start + len].to_vec();
            start += len;
            SplitPlan::from_test(total, fold, i)
        })
        .collect())
}
