use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_FOLDS: usize = 10;

/// Assignment of every sample to exactly one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

fn check(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidFolds(format!("k must be at least 2, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidFolds(format!("{n} samples cannot fill {k} folds")));
    }
    Ok(())
}

/// Seeded shuffle cut into `k` contiguous folds; the first `n % k` folds get
/// one extra sample.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    check(n, k)?;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut assignments = vec![0; n];
    let mut at = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &perm[at..at + size] {
            assignments[i] = fold;
        }
        at += size;
    }
    Ok(FoldPlan { k, seed, assignments })
}

/// Target-binned variant: samples sorted by target (ties in shuffled order)
/// and dealt round-robin, so every fold sees the whole target range.
pub fn make_stratified_folds<T: Real>(y: &[T], k: usize, seed: u64) -> Result<FoldPlan> {
    check(y.len(), k)?;
    let mut perm: Vec<usize> = (0..y.len()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut assignments = vec![0; y.len()];
    for (pos, &i) in perm.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, seed, assignments })
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_and_remainder_sizes() {
        assert_eq!(make_folds(100, 10, 1).unwrap().fold_sizes(), vec![10; 10]);
        let mut sizes = make_folds(105, 10, 1).unwrap().fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, [vec![10; 5], vec![11; 5]].concat());
    }

    #[test]
    fn deterministic_and_seeded() {
        assert_eq!(make_folds(50, 5, 3).unwrap(), make_folds(50, 5, 3).unwrap());
        assert_ne!(make_folds(50, 5, 3).unwrap(), make_folds(50, 5, 4).unwrap());
    }

    #[test]
    fn rejects_too_few_samples() {
        assert!(make_folds(9, 10, 0).is_err());
        assert!(make_folds(10, 1, 0).is_err());
    }

    #[test]
    fn stratified_balances_targets() {
        let y: Vec<f64> = (0..100).map(|i| (i % 13) as f64).collect();
        let plan = make_stratified_folds(&y, 10, 2).unwrap();
        assert!(plan.fold_sizes().iter().all(|&s| s == 10));
    }

    proptest! {
        #[test]
        fn folds_partition_samples(n in 10usize..300, k in 2usize..10, seed in any::<u64>()) {
            let plan = make_folds(n, k, seed).unwrap();
            let sizes = plan.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut seen = vec![0; n];
            for f in 0..k {
                let test = plan.test_indices(f);
                let train = plan.train_indices(f);
                prop_assert_eq!(test.len() + train.len(), n);
                prop_assert!(test.iter().all(|i| !train.contains(i)));
                for i in test { seen[i] += 1; }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
