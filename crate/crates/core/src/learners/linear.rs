use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ridge added to the diagonal of the centred normal matrix so that
/// rank-deficient designs (duplicated or collinear columns) stay solvable.
pub const NORMAL_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearModel<T: Real> {
    pub intercept: T,
    pub coefficients: Vec<T>,
    /// Training column means, the reference point of linear attributions.
    pub feature_means: Vec<T>,
}

impl<T: Real> LinearModel<T> {
    pub fn predict_row(&self, x: ArrayView1<'_, T>) -> T {
        self.coefficients
            .iter()
            .zip(x.iter())
            .fold(self.intercept, |s, (&b, &v)| s + b * v)
    }

    pub fn predict(&self, x: &Array2<T>) -> Array1<T> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }
}

/// Least squares with intercept, via Cholesky on the centred normal equations.
pub fn fit_linear<T: Real>(x: &Array2<T>, y: &[T]) -> Result<LinearModel<T>> {
    let (n, p) = x.dim();
    if n == 0 {
        return Err(Error::EmptyDataset("linear fit needs at least one row".into()));
    }
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!("{n} rows but {} targets", y.len())));
    }
    let nf = T::from_usize_lossy(n);
    let means = x.mean_axis(Axis(0)).expect("n > 0");
    let y_mean = y.iter().copied().sum::<T>() / nf;
    let xc = x - &means.view().insert_axis(Axis(0));
    let yc: Array1<T> = y.iter().map(|&v| v - y_mean).collect();

    let mut a = xc.t().dot(&xc);
    let mut b = xc.t().dot(&yc);
    for j in 0..p {
        a[[j, j]] += T::lit(NORMAL_RIDGE);
    }
    cholesky_in_place(&mut a);
    // Forward then backward substitution with L and L^T.
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= a[[i, k]] * b[k];
        }
        b[i] = s / a[[i, i]];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s -= a[[k, i]] * b[k];
        }
        b[i] = s / a[[i, i]];
    }
    let intercept = y_mean - b.iter().zip(means.iter()).fold(T::zero(), |s, (&c, &m)| s + c * m);
    if !intercept.is_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { epoch: 0 });
    }
    Ok(LinearModel {
        intercept,
        coefficients: b.to_vec(),
        feature_means: means.to_vec(),
    })
}

/// Lower-triangular Cholesky factor written into the lower half of `a`.
/// Pivots that round to non-positive values are replaced by the ridge, which
/// zeroes the corresponding direction instead of failing.
fn cholesky_in_place<T: Real>(a: &mut Array2<T>) {
    let p = a.nrows();
    let floor = T::lit(NORMAL_RIDGE).sqrt();
    for j in 0..p {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= a[[j, k]] * a[[j, k]];
        }
        let l = if d > T::zero() { d.sqrt() } else { floor };
        a[[j, j]] = l;
        for i in j + 1..p {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = s / l;
        }
    }
}
