//! Regression trees grown on first and second order statistics.
//!
//! One builder serves both ensembles. Each training row carries a gradient
//! `g` and hessian `h`; a node's weight is `-G / (H + lambda)` and a split's
//! gain is
//!
//! ```text
//! G_L^2 / (H_L + lambda) + G_R^2 / (H_R + lambda) - G^2 / (H + lambda)
//! ```
//!
//! With `g = -c y`, `h = c` (bootstrap multiplicity `c`) and `lambda = 0`
//! this is exactly variance-reduction CART with mean-valued leaves; with
//! `g = pred - y`, `h = 1` it is the Newton step of squared-error boosting.
//!
//! Column orders are sorted once per training matrix and shared across all
//! trees; a node's rows occupy one contiguous range of every column order,
//! and splitting stably partitions those ranges.

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "kind", rename_all = "snake_case")]
pub enum Node<T: Real> {
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
        cover: T,
    },
    Leaf {
        value: T,
        cover: T,
    },
}

impl<T: Real> Node<T> {
    pub fn cover(&self) -> T {
        match self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover,
        }
    }
}

/// Binary tree stored as an arena; node 0 is the root. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RegressionTree<T: Real> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Real> RegressionTree<T> {
    pub fn leaf(value: T, cover: T) -> Self {
        Self { nodes: vec![Node::Leaf { value, cover }] }
    }

    pub fn predict_row(&self, x: ArrayView1<'_, T>) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value, .. } => return *value,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, x: &Array2<T>) -> Vec<T> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn depth(&self) -> usize {
        fn go<T: Real>(t: &RegressionTree<T>, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Cover-weighted mean of the leaf values.
    pub fn expected_value(&self) -> T {
        fn go<T: Real>(t: &RegressionTree<T>, i: usize) -> T {
            match &t.nodes[i] {
                Node::Leaf { value, .. } => *value,
                Node::Split { left, right, cover, .. } => {
                    let (l, r) = (&t.nodes[*left], &t.nodes[*right]);
                    (l.cover() * go(t, *left) + r.cover() * go(t, *right)) / *cover
                }
            }
        }
        go(self, 0)
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

/// Training matrix in column-major form with per-column ascending row orders.
#[derive(Debug, Clone)]
pub struct SortedColumns<T> {
    pub n_rows: usize,
    columns: Vec<Vec<T>>,
    order: Vec<Vec<u32>>,
}

impl<T: Real> SortedColumns<T> {
    pub fn new(x: &Array2<T>) -> Self {
        let n = x.nrows();
        let columns: Vec<Vec<T>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
        let order = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| {
                    col[a as usize]
                        .partial_cmp(&col[b as usize])
                        .expect("tree inputs must be complete")
                });
                idx
            })
            .collect();
        Self { n_rows: n, columns, order }
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams<T> {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub lambda: T,
    /// Features examined per split (all when `>= p`).
    pub max_features: usize,
    /// Accept the best split even at zero gain as long as the node is
    /// impure. CART does; boosting requires strictly positive gain.
    pub accept_zero_gain: bool,
}

struct Task {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
}

#[derive(Clone, Copy)]
struct Candidate<T> {
    gain: T,
    feature: usize,
    threshold: T,
}

impl<T: Real> Candidate<T> {
    fn beats(&self, other: &Option<Candidate<T>>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.gain > o.gain
                    || (self.gain == o.gain
                        && (self.feature < o.feature
                            || (self.feature == o.feature && self.threshold < o.threshold)))
            }
        }
    }
}

/// Grow one tree. Rows with zero hessian (e.g. absent from a bootstrap
/// sample) take no part. `rng` drives per-split feature subsampling and is
/// only consulted when `max_features < p`.
pub fn grow_tree<T: Real>(
    data: &SortedColumns<T>,
    grad: &[T],
    hess: &[T],
    params: &GrowParams<T>,
    rng: &mut ChaCha8Rng,
) -> RegressionTree<T> {
    let p = data.n_features();
    let mut order: Vec<Vec<u32>> = data
        .order
        .iter()
        .map(|o| o.iter().copied().filter(|&r| hess[r as usize] > T::zero()).collect())
        .collect();
    let active = order.first().map_or(0, Vec::len);
    let stat = |rows: &[u32]| {
        rows.iter()
            .fold((T::zero(), T::zero()), |(g, h), &r| (g + grad[r as usize], h + hess[r as usize]))
    };
    if p == 0 || active == 0 {
        let rows: Vec<u32> = (0..data.n_rows as u32).filter(|&r| hess[r as usize] > T::zero()).collect();
        let (g, h) = stat(&rows);
        let value = if h + params.lambda > T::zero() { -g / (h + params.lambda) } else { T::zero() };
        return RegressionTree::leaf(value, h);
    }

    let mut nodes: Vec<Node<T>> = vec![Node::Leaf { value: T::zero(), cover: T::zero() }];
    let mut stack = vec![Task { node: 0, start: 0, end: active, depth: 0 }];
    let mut goes_left = vec![false; data.n_rows];
    let mut scratch: Vec<u32> = Vec::with_capacity(active);
    let mut features: Vec<usize> = (0..p).collect();
    let subsample = params.max_features < p;

    while let Some(task) = stack.pop() {
        let rows = &order[0][task.start..task.end];
        let (g_sum, h_sum) = stat(rows);
        let value = -g_sum / (h_sum + params.lambda);
        let count = task.end - task.start;
        let ratio = |r: u32| grad[r as usize] / hess[r as usize];
        let pure = rows.iter().all(|&r| ratio(r) == ratio(rows[0]));
        let depth_ok = params.max_depth.is_none_or(|d| task.depth < d);
        nodes[task.node] = Node::Leaf { value, cover: h_sum };
        if !depth_ok || pure || count < 2 * params.min_samples_leaf {
            continue;
        }

        let parent_score = g_sum * g_sum / (h_sum + params.lambda);
        if subsample {
            features.shuffle(rng);
        }
        let mut best: Option<Candidate<T>> = None;
        let mut examined = 0;
        for &f in features.iter() {
            if subsample && examined == params.max_features {
                break;
            }
            let col = &data.columns[f];
            let ord = &order[f][task.start..task.end];
            if col[ord[0] as usize] == col[ord[count - 1] as usize] {
                continue;
            }
            examined += 1;
            let (mut gl, mut hl) = (T::zero(), T::zero());
            for i in 0..count - 1 {
                let r = ord[i] as usize;
                gl += grad[r];
                hl += hess[r];
                let (v, next) = (col[r], col[ord[i + 1] as usize]);
                if v == next || i + 1 < params.min_samples_leaf || count - i - 1 < params.min_samples_leaf {
                    continue;
                }
                let (gr, hr) = (g_sum - gl, h_sum - hl);
                let gain = gl * gl / (hl + params.lambda) + gr * gr / (hr + params.lambda) - parent_score;
                let mut threshold = (v + next) / T::lit(2.0);
                if threshold >= next {
                    threshold = v;
                }
                let cand = Candidate { gain, feature: f, threshold };
                if cand.beats(&best) {
                    best = Some(cand);
                }
            }
        }
        let Some(best) = best else { continue };
        if !(best.gain > T::zero() || (params.accept_zero_gain && best.gain.is_finite())) {
            continue;
        }

        let col = &data.columns[best.feature];
        for &r in rows {
            goes_left[r as usize] = col[r as usize] <= best.threshold;
        }
        let mut n_left = 0;
        for ord in order.iter_mut() {
            let span = &mut ord[task.start..task.end];
            scratch.clear();
            let mut w = 0;
            for i in 0..span.len() {
                let r = span[i];
                if goes_left[r as usize] {
                    span[w] = r;
                    w += 1;
                } else {
                    scratch.push(r);
                }
            }
            span[w..].copy_from_slice(&scratch);
            n_left = w;
        }
        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { value: T::zero(), cover: T::zero() });
        nodes.push(Node::Leaf { value: T::zero(), cover: T::zero() });
        nodes[task.node] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            cover: h_sum,
        };
        let mid = task.start + n_left;
        stack.push(Task { node: right, start: mid, end: task.end, depth: task.depth + 1 });
        stack.push(Task { node: left, start: task.start, end: mid, depth: task.depth + 1 });
    }
    RegressionTree { nodes }
}

/// Variance-reduction CART on unit-weight rows.
pub fn fit_tree<T: Real>(
    x: &Array2<T>,
    y: &[T],
    max_depth: Option<usize>,
    min_samples_leaf: usize,
) -> RegressionTree<T> {
    use rand::SeedableRng;
    let data = SortedColumns::new(x);
    let grad: Vec<T> = y.iter().map(|&v| -v).collect();
    let hess = vec![T::one(); y.len()];
    let params = GrowParams {
        max_depth,
        min_samples_leaf: min_samples_leaf.max(1),
        lambda: T::zero(),
        max_features: x.ncols(),
        accept_zero_gain: true,
    };
    grow_tree(&data, &grad, &hess, &params, &mut ChaCha8Rng::seed_from_u64(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn mse(t: &RegressionTree<f64>, x: &Array2<f64>, y: &[f64]) -> f64 {
        t.predict(x).iter().zip(y).map(|(p, v)| (p - v).powi(2)).sum::<f64>() / y.len() as f64
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let x = array![[0.1], [0.5], [0.9]];
        let t = fit_tree(&x, &[3.0, 3.0, 3.0], None, 1);
        assert_eq!(t.nodes, vec![Node::Leaf { value: 3.0, cover: 3.0 }]);
    }

    #[test]
    fn step_function_splits_at_midpoint() {
        let x = array![[0.1], [0.3], [0.45], [0.55], [0.7], [0.9]];
        let y = [0.0f64, 0.0, 0.0, 1.0, 1.0, 1.0];
        let t = fit_tree(&x, &y, Some(1), 1);
        match &t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert!((threshold - 0.5).abs() < 1e-12);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(mse(&t, &x, &y), 0.0);
    }

    #[test]
    fn xor_fits_at_depth_two() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = [0.0, 1.0, 1.0, 0.0];
        let t = fit_tree(&x, &y, Some(2), 1);
        assert_eq!(mse(&t, &x, &y), 0.0);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn equal_gain_prefers_lower_feature() {
        // Both columns separate y identically.
        let x = array![[0.0, 0.0], [1.0, 1.0]];
        let t = fit_tree(&x, &[0.0, 1.0], Some(1), 1);
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn depth_bound_and_min_leaf() {
        let x = Array2::from_shape_fn((64, 1), |(i, _)| i as f64);
        let y: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
        let t = fit_tree(&x, &y, Some(3), 1);
        assert!(t.depth() <= 3);
        let t = fit_tree(&x, &y, None, 8);
        for n in &t.nodes {
            if let Node::Leaf { cover, .. } = n {
                assert!(*cover >= 8.0);
            }
        }
    }

    #[test]
    fn expected_value_is_training_mean() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        let y: Vec<f64> = (0..20).map(|i| (i % 4) as f64).collect();
        let t = fit_tree(&x, &y, Some(3), 1);
        let mean = y.iter().sum::<f64>() / 20.0;
        assert!((t.expected_value() - mean).abs() < 1e-12);
    }
}
