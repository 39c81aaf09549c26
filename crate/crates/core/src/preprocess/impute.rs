//! K-nearest-neighbour imputation under the missing-aware Euclidean distance.
//!
//! For rows `a` and `b` let `S` be the coordinates observed in both. The
//! distance is `sqrt(p / |S| * sum_{j in S} (a_j - b_j)^2)` where `p` is the
//! total column count. A missing cell `(s, j)` is filled with the unweighted
//! mean of column `j` over the `k` reference rows closest to `s` among those
//! that observe `j` and share at least one coordinate with `s`. Ties are
//! broken by lower reference row index.

use std::sync::OnceLock;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_K_NEIGHBORS: usize = 5;

const QUERY_BLOCK: usize = 8;
const REFERENCE_TILE: usize = 512;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KnnImputer<T: Real> {
    pub k: usize,
    /// Fit-split rows, missing cells as NaN.
    #[serde(with = "crate::scalar::serde_nan_matrix")]
    pub reference: Array2<T>,
    /// Mean of each observed reference column; fallback when no donor exists.
    pub column_means: Vec<T>,
    #[serde(skip)]
    layout: OnceLock<ColumnLayout<T>>,
}

/// Column-major, zero-filled copy of the reference with an observation mask.
#[derive(Debug, Clone)]
struct ColumnLayout<T> {
    rows: usize,
    values: Vec<T>,
    mask: Vec<T>,
}

impl<T: Real> ColumnLayout<T> {
    fn new(reference: &Array2<T>) -> Self {
        let (rows, cols) = reference.dim();
        let mut values = Vec::with_capacity(rows * cols);
        let mut mask = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for &v in reference.column(j) {
                if v.is_missing() {
                    values.push(T::zero());
                    mask.push(T::zero());
                } else {
                    values.push(v);
                    mask.push(T::one());
                }
            }
        }
        Self { rows, values, mask }
    }

    fn column(&self, j: usize) -> (&[T], &[T]) {
        let span = j * self.rows..(j + 1) * self.rows;
        (&self.values[span.clone()], &self.mask[span])
    }
}

impl<T: Real> KnnImputer<T> {
    pub fn fit(x: &Array2<T>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidSpec("k_neighbors must be at least 1".into()));
        }
        if x.nrows() == 0 {
            return Err(Error::ShapeMismatch("cannot fit an imputer on zero rows".into()));
        }
        let mut column_means = Vec::with_capacity(x.ncols());
        for (j, col) in x.columns().into_iter().enumerate() {
            let (sum, n) = col
                .iter()
                .filter(|v| !v.is_missing())
                .fold((T::zero(), 0usize), |(s, n), &v| (s + v, n + 1));
            if n == 0 {
                return Err(Error::UnimputableColumn(j));
            }
            column_means.push(sum / T::from_usize_lossy(n));
        }
        Ok(Self {
            k,
            reference: x.clone(),
            column_means,
            layout: OnceLock::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.reference.ncols()
    }

    fn layout(&self) -> &ColumnLayout<T> {
        self.layout.get_or_init(|| ColumnLayout::new(&self.reference))
    }

    /// Fill every missing cell of `x`; observed cells pass through unchanged.
    pub fn transform(&self, x: &Array2<T>) -> Result<Array2<T>> {
        if x.ncols() != self.width() {
            return Err(Error::ShapeMismatch(format!(
                "imputer fitted on {} columns, got {}",
                self.width(),
                x.ncols()
            )));
        }
        let pending: Vec<usize> = (0..x.nrows())
            .filter(|&i| x.row(i).iter().any(|v| v.is_missing()))
            .collect();
        let mut out = x.clone();
        if pending.is_empty() {
            return Ok(out);
        }
        let layout = self.layout();
        let fills: Vec<Vec<(usize, usize, T)>> = pending
            .par_chunks(QUERY_BLOCK)
            .map(|block| self.impute_block(layout, x, block))
            .collect();
        for (i, j, v) in fills.into_iter().flatten() {
            out[[i, j]] = v;
        }
        Ok(out)
    }

    fn impute_block(
        &self,
        layout: &ColumnLayout<T>,
        x: &Array2<T>,
        block: &[usize],
    ) -> Vec<(usize, usize, T)> {
        let dists = block_distances(layout, x, block);
        let mut fills = Vec::new();
        for (dist, &row) in dists.iter().zip(block) {
            for j in 0..self.width() {
                if !x[[row, j]].is_missing() {
                    continue;
                }
                let (values, mask) = layout.column(j);
                let donors = nearest(dist, mask, self.k);
                fills.push((row, j, donor_mean(&donors, values).unwrap_or(self.column_means[j])));
            }
        }
        fills
    }

    /// Indices of the donors chosen for cell `(row, j)` of `x`, nearest first.
    ///
    /// Slow path used for diagnostics; `transform` does not call it.
    pub fn donors(&self, row: ArrayView1<'_, T>, j: usize) -> Vec<usize> {
        let layout = self.layout();
        let p = self.width();
        let pf = T::from_usize_lossy(p);
        let dist: Vec<T> = self
            .reference
            .rows()
            .into_iter()
            .map(|r| {
                let (mut d, mut c) = (T::zero(), T::zero());
                for (&a, &b) in row.iter().zip(r.iter()) {
                    if !a.is_missing() && !b.is_missing() {
                        let diff = a - b;
                        d += diff * diff;
                        c += T::one();
                    }
                }
                if c > T::zero() {
                    (d * pf / c).sqrt()
                } else {
                    T::infinity()
                }
            })
            .collect();
        nearest(&dist, layout.column(j).1, self.k)
            .into_iter()
            .map(|(_, r)| r)
            .collect()
    }
}

/// Missing-aware distances from each query row in `block` to every
/// reference row, accumulated column by column over reference tiles.
fn block_distances<T: Real>(layout: &ColumnLayout<T>, x: &Array2<T>, block: &[usize]) -> Vec<Vec<T>> {
    let n_ref = layout.rows;
    let p = x.ncols();
    let mut sq = vec![vec![T::zero(); n_ref]; block.len()];
    let mut shared = vec![vec![T::zero(); n_ref]; block.len()];

    let mut start = 0;
    while start < n_ref {
        let end = (start + REFERENCE_TILE).min(n_ref);
        for j in 0..p {
            let (values, mask) = layout.column(j);
            let (values, mask) = (&values[start..end], &mask[start..end]);
            for (q, &row) in block.iter().enumerate() {
                let qv = x[[row, j]];
                if qv.is_missing() {
                    continue;
                }
                let d = &mut sq[q][start..end];
                let c = &mut shared[q][start..end];
                for ((d, c), (&v, &m)) in d.iter_mut().zip(c.iter_mut()).zip(values.iter().zip(mask)) {
                    let diff = qv - v;
                    *d += m * (diff * diff);
                    *c += m;
                }
            }
        }
        start = end;
    }

    let pf = T::from_usize_lossy(p);
    sq.iter_mut()
        .zip(&shared)
        .for_each(|(d, c)| {
            for (d, &c) in d.iter_mut().zip(c) {
                *d = if c > T::zero() { (*d * pf / c).sqrt() } else { T::infinity() };
            }
        });
    sq
}

fn donor_mean<T: Real>(donors: &[(T, usize)], values: &[T]) -> Option<T> {
    if donors.is_empty() {
        return None;
    }
    let sum = donors.iter().fold(T::zero(), |s, &(_, r)| s + values[r]);
    Some(sum / T::from_usize_lossy(donors.len()))
}

/// Fill the missing cells of `x` once per group, each time using only the
/// rows of the other groups as reference: entry `g` of the result equals
/// `KnnImputer::fit(rows of x outside g)` applied to `x`, cell for cell.
///
/// Row-to-row distances do not depend on the group, so they are computed
/// once for all groups. Each returned fill list is `(row, column, value)`.
pub fn impute_leave_group_out<T: Real>(
    x: &Array2<T>,
    k: usize,
    groups: &[usize],
    n_groups: usize,
) -> Result<Vec<Vec<(usize, usize, T)>>> {
    // Global shortlist length: long enough that removing one group's rows
    // almost always leaves k donors; otherwise that group rescans.
    leave_group_out(x, k, groups, n_groups, 2 * k + 4)
}

fn leave_group_out<T: Real>(
    x: &Array2<T>,
    k: usize,
    groups: &[usize],
    n_groups: usize,
    shortlist: usize,
) -> Result<Vec<Vec<(usize, usize, T)>>> {
    let (n, p) = x.dim();
    if k == 0 {
        return Err(Error::InvalidSpec("k_neighbors must be at least 1".into()));
    }
    if groups.len() != n || groups.iter().any(|&g| g >= n_groups) {
        return Err(Error::ShapeMismatch(format!("{} group labels for {n} rows", groups.len())));
    }
    // Per-group fallback means over the rows outside the group.
    let mut means = vec![vec![T::zero(); p]; n_groups];
    for (g, m) in means.iter_mut().enumerate() {
        for (j, col) in x.columns().into_iter().enumerate() {
            let (sum, cnt) = col
                .iter()
                .zip(groups)
                .filter(|(v, &gr)| gr != g && !v.is_missing())
                .fold((T::zero(), 0usize), |(s, c), (&v, _)| (s + v, c + 1));
            if cnt == 0 {
                return Err(Error::Fold { fold: g, source: Box::new(Error::UnimputableColumn(j)) });
            }
            m[j] = sum / T::from_usize_lossy(cnt);
        }
    }

    let layout = ColumnLayout::new(x);
    let pending: Vec<usize> = (0..n).filter(|&i| x.row(i).iter().any(|v| v.is_missing())).collect();
    let blocks: Vec<Vec<Vec<(usize, usize, T)>>> = pending
        .par_chunks(QUERY_BLOCK)
        .map(|block| {
            let dists = block_distances(&layout, x, block);
            let mut fills = vec![Vec::new(); n_groups];
            for (dist, &row) in dists.iter().zip(block) {
                for j in 0..p {
                    if !x[[row, j]].is_missing() {
                        continue;
                    }
                    let (values, mask) = layout.column(j);
                    let top = nearest(dist, mask, shortlist);
                    let truncated = top.len() == shortlist;
                    for (g, out) in fills.iter_mut().enumerate() {
                        let mut donors: Vec<(T, usize)> =
                            top.iter().copied().filter(|&(_, r)| groups[r] != g).take(k).collect();
                        if donors.len() < k && truncated {
                            let own: Vec<T> = mask
                                .iter()
                                .zip(groups)
                                .map(|(&m, &gr)| if gr == g { T::zero() } else { m })
                                .collect();
                            donors = nearest(dist, &own, k);
                        }
                        out.push((row, j, donor_mean(&donors, values).unwrap_or(means[g][j])));
                    }
                }
            }
            fills
        })
        .collect();
    let mut out = vec![Vec::new(); n_groups];
    for block in blocks {
        for (g, f) in block.into_iter().enumerate() {
            out[g].extend(f);
        }
    }
    Ok(out)
}

/// The `k` smallest finite `(distance, index)` pairs among rows with `mask == 1`.
fn nearest<T: Real>(dist: &[T], mask: &[T], k: usize) -> Vec<(T, usize)> {
    let mut best: Vec<(T, usize)> = Vec::with_capacity(k + 1);
    for (r, (&d, &m)) in dist.iter().zip(mask).enumerate() {
        if m == T::zero() || !d.is_finite() {
            continue;
        }
        if best.len() == k && d >= best[k - 1].0 {
            continue;
        }
        let at = best.partition_point(|&(bd, _)| bd <= d);
        best.insert(at, (d, r));
        best.truncate(k);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    const NAN: f64 = f64::NAN;

    #[test]
    fn complete_input_is_identity() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let imp = KnnImputer::fit(&x, 5).unwrap();
        assert_eq!(imp.transform(&x).unwrap(), x);
    }

    #[test]
    fn k1_takes_closest_row() {
        let reference = array![[0.0, 0.0, 10.0], [5.0, 5.0, 20.0], [1.0, 1.0, 30.0]];
        let imp = KnnImputer::fit(&reference, 1).unwrap();
        // distances from (0.9, 0.8): row0 sqrt(1.5*1.45), row1 large, row2 sqrt(1.5*0.05)
        let q = array![[0.9, 0.8, NAN]];
        let out = imp.transform(&q).unwrap();
        assert_eq!(out[[0, 2]], 30.0);
        assert_eq!(imp.donors(q.row(0), 2), vec![2]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let reference = array![[1.0, 7.0], [1.0, 9.0], [1.0, 11.0]];
        let imp = KnnImputer::fit(&reference, 2).unwrap();
        let out = imp.transform(&array![[1.0, NAN]]).unwrap();
        assert_eq!(out[[0, 1]], 8.0);
    }

    #[test]
    fn fewer_donors_than_k_uses_all() {
        let reference = array![[1.0, 2.0], [2.0, NAN], [3.0, 6.0]];
        let imp = KnnImputer::fit(&reference, 5).unwrap();
        let out = imp.transform(&array![[2.0, NAN]]).unwrap();
        assert_eq!(out[[0, 1]], 4.0);
    }

    #[test]
    fn no_shared_coordinate_falls_back_to_mean() {
        let reference = array![[NAN, 2.0, 1.0], [NAN, 4.0, 3.0], [5.0, NAN, NAN]];
        let imp = KnnImputer::fit(&reference, 1).unwrap();
        // The query only observes column 0; rows 0 and 1 share nothing with it,
        // row 2 shares column 0 but does not observe column 1.
        let out = imp.transform(&array![[5.0, NAN, NAN]]).unwrap();
        assert_eq!(out[[0, 1]], 3.0);
        assert_eq!(out[[0, 2]], 2.0);
    }

    #[test]
    fn fully_missing_column_is_unimputable() {
        let x = array![[1.0, NAN], [2.0, NAN]];
        assert!(matches!(KnnImputer::fit(&x, 5), Err(Error::UnimputableColumn(1))));
    }

    #[test]
    fn imputation_is_idempotent_and_bounded() {
        let x = array![
            [1.0, 5.0, NAN],
            [2.0, NAN, 3.0],
            [NAN, 7.0, 9.0],
            [4.0, 1.0, 2.0],
            [3.0, 2.0, NAN]
        ];
        let imp = KnnImputer::fit(&x, 2).unwrap();
        let once = imp.transform(&x).unwrap();
        let twice = imp.transform(&once).unwrap();
        assert_eq!(once, twice);
        for j in 0..3 {
            let obs: Vec<f64> = x.column(j).iter().copied().filter(|v| !v.is_nan()).collect();
            let lo = obs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = obs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(once.column(j).iter().all(|&v| v >= lo && v <= hi));
        }
    }

    #[test]
    fn leave_group_out_matches_separate_fits() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((90, 4), |_| {
            if rng.random_bool(0.25) { NAN } else { rng.random_range(0..4) as f64 }
        });
        let groups: Vec<usize> = (0..90).map(|i| (i * 7) % 3).collect();
        // A shortlist of exactly k forces a rescan whenever it holds a row
        // of the left-out group.
        for (k, shortlist) in [(1, 1), (3, 3), (3, 10), (5, 14)] {
            let fills = leave_group_out(&x, k, &groups, 3, shortlist).unwrap();
            for (g, f) in fills.iter().enumerate() {
                let keep: Vec<usize> = (0..90).filter(|&i| groups[i] != g).collect();
                let imp = KnnImputer::fit(&x.select(ndarray::Axis(0), &keep), k).unwrap();
                let expect = imp.transform(&x).unwrap();
                let mut got = x.clone();
                for &(i, j, v) in f {
                    got[[i, j]] = v;
                }
                assert!(got.iter().zip(&expect).all(|(a, b)| a.to_bits() == b.to_bits()));
            }
        }
    }

    #[test]
    fn serde_round_trip_rebuilds_layout() {
        let x = array![[1.0, NAN], [2.0, 4.0], [3.0, 6.0]];
        let imp = KnnImputer::fit(&x, 1).unwrap();
        let back: KnnImputer<f64> =
            serde_json::from_str(&serde_json::to_string(&imp).unwrap()).unwrap();
        let a = imp.transform(&x).unwrap();
        let b = back.transform(&x).unwrap();
        assert_eq!(a, b);
    }
}
