use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sppb_forecast::preprocess::KnnImputer;

/// Straight-line restatement: for every missing cell, score every reference
/// row, sort by (distance, index) and average the first k that observe the
/// column.
fn oracle(reference: &Array2<f64>, x: &Array2<f64>, k: usize) -> Array2<f64> {
    let p = x.ncols() as f64;
    let mut out = x.clone();
    for i in 0..x.nrows() {
        let mut dist = Vec::new();
        for r in 0..reference.nrows() {
            let (mut d, mut c) = (0.0, 0.0);
            for j in 0..x.ncols() {
                let (a, b) = (x[[i, j]], reference[[r, j]]);
                if !a.is_nan() && !b.is_nan() {
                    d += (a - b) * (a - b);
                    c += 1.0;
                }
            }
            dist.push(if c > 0.0 { (d * p / c).sqrt() } else { f64::INFINITY });
        }
        for j in 0..x.ncols() {
            if !x[[i, j]].is_nan() {
                continue;
            }
            let mut cands: Vec<(f64, usize)> = (0..reference.nrows())
                .filter(|&r| !reference[[r, j]].is_nan() && dist[r].is_finite())
                .map(|r| (dist[r], r))
                .collect();
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cands.truncate(k);
            out[[i, j]] = if cands.is_empty() {
                let obs: Vec<f64> = reference.column(j).iter().copied().filter(|v| !v.is_nan()).collect();
                obs.iter().sum::<f64>() / obs.len() as f64
            } else {
                cands.iter().fold(0.0, |s, &(_, r)| s + reference[[r, j]]) / cands.len() as f64
            };
        }
    }
    out
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize, missing: f64, levels: u32) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((n, p), |_| {
        if rng.random_bool(missing) {
            f64::NAN
        } else {
            rng.random_range(0..levels) as f64 / levels as f64
        }
    });
    // Keep every column imputable.
    for j in 0..p {
        if m.column(j).iter().all(|v| v.is_nan()) {
            m[[0, j]] = 0.5;
        }
    }
    m
}

fn same(a: &Array2<f64>, b: &Array2<f64>) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn matches_brute_force_on_self(seed in any::<u64>(), k in 1usize..7, levels in 2u32..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, 20, 8, 0.15, levels);
        let imp = KnnImputer::fit(&x, k).unwrap();
        prop_assert!(same(&imp.transform(&x).unwrap(), &oracle(&x, &x, k)));
    }

    #[test]
    fn matches_brute_force_on_new_rows(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reference = random_matrix(&mut rng, 600, 6, 0.3, 5);
        let queries = random_matrix(&mut rng, 30, 6, 0.5, 5);
        let imp = KnnImputer::fit(&reference, 5).unwrap();
        prop_assert!(same(&imp.transform(&queries).unwrap(), &oracle(&reference, &queries, 5)));
    }

    #[test]
    fn observed_cells_pass_through(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, 25, 5, 0.2, 10);
        let out = KnnImputer::fit(&x, 3).unwrap().transform(&x).unwrap();
        for (a, b) in x.iter().zip(&out) {
            prop_assert!(!b.is_nan());
            if !a.is_nan() {
                prop_assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn row_sharing_nothing_falls_back_to_column_mean() {
    let nan = f64::NAN;
    let reference = ndarray::array![[1.0, nan], [3.0, nan], [nan, 4.0]];
    let query = ndarray::array![[nan, 8.0]];
    let imp = KnnImputer::fit(&reference, 2).unwrap();
    // Rows 0 and 1 observe column 0 but share no coordinate with the query.
    assert_eq!(imp.transform(&query).unwrap()[[0, 0]], 2.0);
}

#[test]
fn equidistant_donors_prefer_lower_index() {
    let reference = ndarray::array![[0.0, 10.0], [2.0, 20.0], [0.0, 30.0]];
    let query = ndarray::array![[1.0, f64::NAN]];
    let imp = KnnImputer::fit(&reference, 1).unwrap();
    assert_eq!(imp.donors(query.row(0), 1), vec![0]);
    assert_eq!(imp.transform(&query).unwrap()[[0, 1]], 10.0);
}
