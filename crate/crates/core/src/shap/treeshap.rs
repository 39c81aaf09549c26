//! Exact Shapley values of tree-ensemble predictions under path-dependent
//! conditional expectations.
//!
//! For a feature subset `S`, `E[f(x) | x_S]` descends a tree following `x`
//! at splits on features in `S` and averaging both children, weighted by
//! training cover, at every other split. The polynomial-time recursion keeps
//! for the current root-to-node path the proportion of subsets of each size
//! that reach the node (`extend` / `unwind`, below); the brute-force version
//! enumerates all `2^p` subsets under the same expectation and exists as a
//! testing oracle.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::learners::tree::{Node, RegressionTree};
use crate::learners::{TrainedRegressor, TreeEnsemble};
use crate::scalar::Real;

pub const BRUTE_FORCE_MAX_FEATURES: usize = 20;

#[derive(Debug, Clone, Copy)]
struct PathElem<T> {
    feature: Option<usize>,
    zero: T,
    one: T,
    weight: T,
}

fn extend<T: Real>(path: &mut Vec<PathElem<T>>, zero: T, one: T, feature: Option<usize>) {
    let l = path.len();
    path.push(PathElem { feature, zero, one, weight: if l == 0 { T::one() } else { T::zero() } });
    let denom = T::from_usize_lossy(l + 1);
    for i in (0..l).rev() {
        let w = path[i].weight;
        path[i + 1].weight += one * w * T::from_usize_lossy(i + 1) / denom;
        path[i].weight = zero * w * T::from_usize_lossy(l - i) / denom;
    }
}

fn unwind<T: Real>(path: &mut Vec<PathElem<T>>, at: usize) {
    let l = path.len() - 1;
    let (one, zero) = (path[at].one, path[at].zero);
    let denom = T::from_usize_lossy(l + 1);
    let mut next = path[l].weight;
    for j in (0..l).rev() {
        if one != T::zero() {
            let t = path[j].weight;
            path[j].weight = next * denom / (T::from_usize_lossy(j + 1) * one);
            next = t - path[j].weight * zero * T::from_usize_lossy(l - j) / denom;
        } else {
            path[j].weight = path[j].weight * denom / (zero * T::from_usize_lossy(l - j));
        }
    }
    // Weights are indexed by subset size and stay in place; only the
    // feature records shift down over the removed element.
    for i in at..l {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    path.pop();
}

/// Total path weight after removing element `at`, without modifying `path`.
fn unwound_sum<T: Real>(path: &[PathElem<T>], at: usize) -> T {
    let l = path.len() - 1;
    let (one, zero) = (path[at].one, path[at].zero);
    let denom = T::from_usize_lossy(l + 1);
    let mut next = path[l].weight;
    let mut total = T::zero();
    for j in (0..l).rev() {
        if one != T::zero() {
            let t = next * denom / (T::from_usize_lossy(j + 1) * one);
            total += t;
            next = path[j].weight - t * zero * T::from_usize_lossy(l - j) / denom;
        } else if zero != T::zero() {
            total += path[j].weight * denom / (zero * T::from_usize_lossy(l - j));
        }
    }
    total
}

fn recurse<T: Real>(
    tree: &RegressionTree<T>,
    node: usize,
    x: ArrayView1<'_, T>,
    phi: &mut [T],
    scale: T,
    mut path: Vec<PathElem<T>>,
    zero: T,
    one: T,
    feature: Option<usize>,
) {
    extend(&mut path, zero, one, feature);
    match &tree.nodes[node] {
        Node::Leaf { value, .. } => {
            for i in 1..path.len() {
                let w = unwound_sum(&path, i);
                let e = path[i];
                phi[e.feature.expect("non-root element")] += w * (e.one - e.zero) * *value * scale;
            }
        }
        Node::Split { feature: f, threshold, left, right, cover } => {
            let (hot, cold) = if x[*f] <= *threshold { (*left, *right) } else { (*right, *left) };
            let (mut iz, mut io) = (T::one(), T::one());
            if let Some(k) = path.iter().skip(1).position(|e| e.feature == Some(*f)) {
                let k = k + 1;
                iz = path[k].zero;
                io = path[k].one;
                unwind(&mut path, k);
            }
            let hot_frac = tree.nodes[hot].cover() / *cover;
            let cold_frac = tree.nodes[cold].cover() / *cover;
            recurse(tree, hot, x, phi, scale, path.clone(), iz * hot_frac, io, Some(*f));
            recurse(tree, cold, x, phi, scale, path, iz * cold_frac, T::zero(), Some(*f));
        }
    }
}

/// Add `scale * phi(tree, x)` into `phi`.
pub fn tree_shap_row<T: Real>(tree: &RegressionTree<T>, x: ArrayView1<'_, T>, scale: T, phi: &mut [T]) {
    recurse(tree, 0, x, phi, scale, Vec::new(), T::one(), T::one(), None);
}

fn ensemble_of<T: Real>(model: &TrainedRegressor<T>, p: usize) -> Result<&TreeEnsemble<T>> {
    let ens = model
        .ensemble()
        .ok_or_else(|| Error::UnsupportedFamily(model.family().to_string()))?;
    if p != model.n_features {
        return Err(Error::ShapeMismatch(format!(
            "model trained on {} features, got {p}",
            model.n_features
        )));
    }
    Ok(ens)
}

/// Per-sample attributions and the ensemble's expected value.
pub fn tree_shap_values<T: Real>(model: &TrainedRegressor<T>, x: &Array2<T>) -> Result<(Array2<T>, T)> {
    let p = x.ncols();
    let ens = ensemble_of(model, p)?;
    let rows: Vec<Vec<T>> = (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let mut phi = vec![T::zero(); p];
            for tree in &ens.trees {
                tree_shap_row(tree, x.row(i), ens.scale, &mut phi);
            }
            phi
        })
        .collect();
    let flat: Vec<T> = rows.into_iter().flatten().collect();
    let values = Array2::from_shape_vec((x.nrows(), p), flat).expect("rows of width p");
    Ok((values, ens.expected_value()))
}

/// `E[tree(x) | x_S]` with `S` given as a membership mask.
fn conditional<T: Real>(tree: &RegressionTree<T>, node: usize, x: ArrayView1<'_, T>, known: &[bool]) -> T {
    match &tree.nodes[node] {
        Node::Leaf { value, .. } => *value,
        Node::Split { feature, threshold, left, right, cover } => {
            if known[*feature] {
                let next = if x[*feature] <= *threshold { *left } else { *right };
                conditional(tree, next, x, known)
            } else {
                let l = tree.nodes[*left].cover() * conditional(tree, *left, x, known);
                let r = tree.nodes[*right].cover() * conditional(tree, *right, x, known);
                (l + r) / *cover
            }
        }
    }
}

/// Shapley values of one sample by enumerating every feature subset.
///
/// Path-dependent expectations need no background sample: the training
/// cover stored in each node plays that role.
pub fn brute_force_shap<T: Real>(model: &TrainedRegressor<T>, x: ArrayView1<'_, T>) -> Result<Vec<T>> {
    let p = x.len();
    if p > BRUTE_FORCE_MAX_FEATURES {
        return Err(Error::TooManyFeatures { got: p, max: BRUTE_FORCE_MAX_FEATURES });
    }
    let ens = ensemble_of(model, p)?;
    let mut value = vec![T::zero(); 1 << p];
    let mut known = vec![false; p];
    for (mask, v) in value.iter_mut().enumerate() {
        for (j, k) in known.iter_mut().enumerate() {
            *k = mask >> j & 1 == 1;
        }
        let sum = ens.trees.iter().fold(T::zero(), |s, t| s + conditional(t, 0, x, &known));
        *v = ens.base + ens.scale * sum;
    }
    // weight[s] = s! (p - s - 1)! / p!
    let mut fact = vec![1.0f64; p + 1];
    for i in 1..=p {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<T> = (0..p).map(|s| T::lit(fact[s] * fact[p - s - 1] / fact[p])).collect();
    let mut phi = vec![T::zero(); p];
    for mask in 0..1usize << p {
        let size = mask.count_ones() as usize;
        for (j, out) in phi.iter_mut().enumerate() {
            if mask >> j & 1 == 0 {
                *out += weight[size] * (value[mask | 1 << j] - value[mask]);
            }
        }
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{MaxDepth, RegressorSpec};
    use ndarray::array;

    fn stump(feature: usize, threshold: f64, lo: f64, hi: f64, p: usize) -> TrainedRegressor<f64> {
        let tree = RegressionTree {
            nodes: vec![
                Node::Split { feature, threshold, left: 1, right: 2, cover: 4.0 },
                Node::Leaf { value: lo, cover: 3.0 },
                Node::Leaf { value: hi, cover: 1.0 },
            ],
        };
        let mut m = TrainedRegressor::fit(
            &Array2::zeros((2, p)),
            &[0.0, 0.0],
            &RegressorSpec::boosted(0, MaxDepth::Limited(1)),
        )
        .unwrap();
        if let crate::learners::FittedModel::Boosted(e) = &mut m.model {
            e.base = 0.0;
            e.scale = 1.0;
            e.trees = vec![tree];
        }
        m
    }

    #[test]
    fn stump_credits_only_its_feature() {
        let m = stump(1, 0.5, 2.0, 10.0, 3);
        let x = array![[0.0, 0.9, 0.0], [0.3, 0.1, 7.0]];
        let (phi, base) = tree_shap_values(&m, &x).unwrap();
        assert_eq!(base, 4.0);
        assert_eq!(phi.row(0).to_vec(), vec![0.0, 6.0, 0.0]);
        assert_eq!(phi.row(1).to_vec(), vec![0.0, -2.0, 0.0]);
    }

    #[test]
    fn single_feature_gets_prediction_minus_base() {
        let m = stump(0, 0.5, 1.0, 5.0, 1);
        let phi = brute_force_shap(&m, array![0.7].view()).unwrap();
        assert_eq!(phi, vec![3.0]);
    }

    #[test]
    fn rejects_non_tree_models_and_wide_inputs() {
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i + j) as f64);
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let lin = TrainedRegressor::fit(&x, &y, &RegressorSpec::linear()).unwrap();
        assert!(matches!(tree_shap_values(&lin, &x), Err(Error::UnsupportedFamily(_))));
        let wide = stump(0, 0.5, 0.0, 1.0, 21);
        assert!(matches!(
            brute_force_shap(&wide, Array2::<f64>::zeros((1, 21)).row(0)),
            Err(Error::TooManyFeatures { .. })
        ));
    }
}
