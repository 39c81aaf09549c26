//! Random forests and second-order gradient boosting over [`grow_tree`].

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{Family, RegressorSpec};
use super::tree::{grow_tree, GrowParams, RegressionTree, SortedColumns};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `base + scale * sum_t tree_t(x)`.
///
/// Forests use `base = 0`, `scale = 1 / T`; boosting uses `base = mean(y)`,
/// `scale = learning_rate` and raw Newton leaf weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TreeEnsemble<T: Real> {
    pub base: T,
    pub scale: T,
    pub trees: Vec<RegressionTree<T>>,
}

impl<T: Real> TreeEnsemble<T> {
    pub fn predict_row(&self, x: ArrayView1<'_, T>) -> T {
        let sum = self.trees.iter().fold(T::zero(), |s, t| s + t.predict_row(x));
        self.base + self.scale * sum
    }

    pub fn predict(&self, x: &Array2<T>) -> Array1<T> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }

    /// Path-dependent expectation of the ensemble output.
    pub fn expected_value(&self) -> T {
        let sum = self.trees.iter().fold(T::zero(), |s, t| s + t.expected_value());
        self.base + self.scale * sum
    }

    /// The first `n` members with the scale a fit of `n` trees would use.
    ///
    /// Per-tree seeds do not depend on the ensemble size and boosting rounds
    /// only look backwards, so this equals fitting `n` trees directly.
    pub fn truncated(&self, family: Family, n: usize) -> Self {
        let n = n.min(self.trees.len());
        let scale = match family {
            Family::Forest => T::one() / T::from_usize_lossy(n.max(1)),
            _ => self.scale,
        };
        Self { base: self.base, scale, trees: self.trees[..n].to_vec() }
    }
}

/// Per-tree generator: the spec seed, on a stream numbered by tree index.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn check_rows<T: Real>(x: &Array2<T>, y: &[T]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset("no training rows".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::ShapeMismatch("tree inputs must be complete and finite".into()));
    }
    Ok(())
}

pub fn fit_forest<T: Real>(x: &Array2<T>, y: &[T], spec: &RegressorSpec) -> Result<TreeEnsemble<T>> {
    check_rows(x, y)?;
    spec.validate()?;
    let data = SortedColumns::new(x);
    let n = x.nrows();
    let params = GrowParams {
        max_depth: spec.max_depth.limit(),
        min_samples_leaf: spec.min_samples_leaf,
        lambda: T::zero(),
        max_features: spec.max_features.resolve(x.ncols()),
        accept_zero_gain: true,
    };
    let trees = (0..spec.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(spec.seed, t);
            let counts: Vec<T> = if spec.bootstrap {
                let mut c = vec![0u32; n];
                for _ in 0..n {
                    c[rng.random_range(0..n)] += 1;
                }
                c.into_iter().map(|k| T::from_usize_lossy(k as usize)).collect()
            } else {
                vec![T::one(); n]
            };
            let grad: Vec<T> = counts.iter().zip(y).map(|(&c, &v)| -(c * v)).collect();
            grow_tree(&data, &grad, &counts, &params, &mut rng)
        })
        .collect();
    Ok(TreeEnsemble {
        base: T::zero(),
        scale: T::one() / T::from_usize_lossy(spec.trees),
        trees,
    })
}

pub fn fit_boosted<T: Real>(x: &Array2<T>, y: &[T], spec: &RegressorSpec) -> Result<TreeEnsemble<T>> {
    check_rows(x, y)?;
    spec.validate()?;
    let data = SortedColumns::new(x);
    let n = x.nrows();
    let base = y.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    let lr = T::lit(spec.learning_rate);
    let params = GrowParams {
        max_depth: spec.max_depth.limit(),
        min_samples_leaf: spec.min_samples_leaf,
        lambda: T::lit(spec.l2_leaf_penalty),
        max_features: x.ncols(),
        accept_zero_gain: false,
    };
    let hess = vec![T::one(); n];
    let mut sum = vec![T::zero(); n];
    let mut grad = vec![T::zero(); n];
    let mut trees = Vec::with_capacity(spec.trees);
    for t in 0..spec.trees {
        for i in 0..n {
            grad[i] = base + lr * sum[i] - y[i];
        }
        let tree = grow_tree(&data, &grad, &hess, &params, &mut tree_rng(spec.seed, t));
        for (i, row) in x.rows().into_iter().enumerate() {
            sum[i] += tree.predict_row(row);
        }
        trees.push(tree);
    }
    Ok(TreeEnsemble { base, scale: lr, trees })
}
