use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sppb_forecast::learners::{FittedModel, MaxDepth, Node, RegressionTree, RegressorSpec, TrainedRegressor};
use sppb_forecast::shap::{brute_force_shap, tree_shap_values};

/// Values on a coarse grid so that ties and repeated thresholds occur.
fn random_problem(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Array2<f64>, Vec<f64>) {
    let x = Array2::from_shape_fn((n, p), |_| (rng.random_range(0..8) as f64) / 7.0);
    let w: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = x
        .rows()
        .into_iter()
        .map(|r| {
            let lin: f64 = r.iter().zip(&w).map(|(a, b)| a * b).sum();
            lin + if r[0] > 0.5 && r[p - 1] < 0.5 { 1.5 } else { 0.0 } + rng.random_range(-0.2..0.2)
        })
        .collect();
    (x, y)
}

fn random_model(seed: u64, boosted: bool) -> (TrainedRegressor<f64>, Array2<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.random_range(1..=8);
    let n = rng.random_range(20..80);
    let (x, y) = random_problem(&mut rng, n, p);
    let trees = rng.random_range(1..=12);
    let depth = MaxDepth::Limited(rng.random_range(1..=4));
    let spec = if boosted {
        RegressorSpec::boosted(trees, depth)
    } else {
        RegressorSpec::forest(trees, depth)
    }
    .with_seed(seed);
    (TrainedRegressor::fit(&x, &y, &spec).unwrap(), x)
}

fn model_from_trees(p: usize, trees: Vec<RegressionTree<f64>>) -> TrainedRegressor<f64> {
    let mut m = TrainedRegressor::fit(
        &Array2::zeros((2, p)),
        &[0.0, 0.0],
        &RegressorSpec::boosted(0, MaxDepth::Limited(1)),
    )
    .unwrap();
    if let FittedModel::Boosted(e) = &mut m.model {
        e.base = 0.0;
        e.scale = 1.0;
        e.trees = trees;
    }
    m
}

fn stump(feature: usize, threshold: f64, lo: (f64, f64), hi: (f64, f64)) -> RegressionTree<f64> {
    RegressionTree {
        nodes: vec![
            Node::Split { feature, threshold, left: 1, right: 2, cover: lo.1 + hi.1 },
            Node::Leaf { value: lo.0, cover: lo.1 },
            Node::Leaf { value: hi.0, cover: hi.1 },
        ],
    }
}

#[test]
fn additive_trees_attribute_to_their_own_feature() {
    let a = stump(0, 0.5, (1.0, 2.0), (3.0, 2.0));
    let b = stump(1, 0.2, (-4.0, 1.0), (6.0, 3.0));
    let m = model_from_trees(3, vec![a.clone(), b.clone()]);
    let x = ndarray::array![[0.9, 0.1, 5.0], [0.1, 0.9, -5.0]];
    let (phi, base) = tree_shap_values(&m, &x).unwrap();
    assert_eq!(base, a.expected_value() + b.expected_value());
    for i in 0..2 {
        assert!((phi[[i, 0]] - (a.predict_row(x.row(i)) - a.expected_value())).abs() < 1e-12);
        assert!((phi[[i, 1]] - (b.predict_row(x.row(i)) - b.expected_value())).abs() < 1e-12);
        assert_eq!(phi[[i, 2]], 0.0);
    }
}

#[test]
fn symmetric_model_splits_credit_equally() {
    // f = 1 if x0 > .5 and x1 > .5, with exchangeable covers.
    let tree = |first: usize, second: usize| RegressionTree {
        nodes: vec![
            Node::Split { feature: first, threshold: 0.5, left: 1, right: 2, cover: 4.0 },
            Node::Leaf { value: 0.0, cover: 2.0 },
            Node::Split { feature: second, threshold: 0.5, left: 3, right: 4, cover: 2.0 },
            Node::Leaf { value: 0.0, cover: 1.0 },
            Node::Leaf { value: 1.0, cover: 1.0 },
        ],
    };
    let m = model_from_trees(2, vec![tree(0, 1)]);
    for x in [[0.9, 0.9], [0.1, 0.1]] {
        let phi = brute_force_shap(&m, ndarray::arr1(&x).view()).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-15);
        let (fast, _) = tree_shap_values(&m, &ndarray::arr2(&[x])).unwrap();
        assert!((fast[[0, 0]] - fast[[0, 1]]).abs() < 1e-15);
    }
    let m2 = model_from_trees(2, vec![tree(1, 0)]);
    let x = ndarray::array![[0.9, 0.1]];
    let (a, _) = tree_shap_values(&m, &x).unwrap();
    let (b, _) = tree_shap_values(&m2, &x).unwrap();
    assert!((a[[0, 0]] - b[[0, 0]]).abs() < 1e-15 && (a[[0, 1]] - b[[0, 1]]).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fast_matches_enumeration(seed in any::<u64>(), boosted in any::<bool>()) {
        let (m, x) = random_model(seed, boosted);
        let (phi, base) = tree_shap_values(&m, &x).unwrap();
        let pred = m.predict(&x).unwrap();
        let used: Vec<usize> = m.ensemble().unwrap().trees.iter().flat_map(|t| t.split_features()).collect();
        for i in 0..x.nrows().min(15) {
            let oracle = brute_force_shap(&m, x.row(i)).unwrap();
            for j in 0..x.ncols() {
                prop_assert!((phi[[i, j]] - oracle[j]).abs() < 1e-8, "row {i} feature {j}");
                if !used.contains(&j) {
                    prop_assert_eq!(phi[[i, j]], 0.0);
                }
            }
        }
        for i in 0..x.nrows() {
            let total: f64 = base + phi.row(i).sum();
            prop_assert!((total - pred[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn row_order_does_not_change_attributions(seed in any::<u64>()) {
        let (m, x) = random_model(seed, true);
        let (phi, _) = tree_shap_values(&m, &x).unwrap();
        let rev = Array2::from_shape_fn(x.dim(), |(i, j)| x[[x.nrows() - 1 - i, j]]);
        let (phi_rev, _) = tree_shap_values(&m, &rev).unwrap();
        for i in 0..x.nrows() {
            prop_assert_eq!(phi.row(i), phi_rev.row(x.nrows() - 1 - i));
        }
    }
}

#[test]
fn f32_attributions_are_locally_accurate() {
    let (m64, x) = random_model(11, true);
    let x32 = x.mapv(|v| v as f32);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y32: Vec<f32> = (0..x.nrows()).map(|_| rng.random_range(0.0..12.0)).collect();
    let m = TrainedRegressor::fit(&x32, &y32, &RegressorSpec { seed: 1, ..m64.spec.clone() }).unwrap();
    let (phi, base) = tree_shap_values(&m, &x32).unwrap();
    let pred = m.predict(&x32).unwrap();
    for i in 0..x.nrows() {
        assert!((base + phi.row(i).sum() - pred[i]).abs() < 1e-4);
    }
}

