use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-column min-max scaling to `[0, 1]` with fit-split statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MinMaxScaler<T: Real> {
    pub min: Vec<T>,
    pub max: Vec<T>,
}

impl<T: Real> MinMaxScaler<T> {
    pub fn fit(x: &Array2<T>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::ShapeMismatch("cannot fit a scaler on zero rows".into()));
        }
        let mut min = Vec::with_capacity(x.ncols());
        let mut max = Vec::with_capacity(x.ncols());
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let mut lo = T::infinity();
            let mut hi = T::neg_infinity();
            for &v in col {
                if v.is_missing() {
                    return Err(Error::ShapeMismatch(format!(
                        "column {j} still has missing cells; impute before scaling"
                    )));
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
            min.push(lo);
            max.push(hi);
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    fn check(&self, x: &Array2<T>) -> Result<()> {
        if x.ncols() != self.width() {
            return Err(Error::ShapeMismatch(format!(
                "scaler fitted on {} columns, got {}",
                self.width(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Constant columns map to 0; values outside the fit range are clipped.
    pub fn transform(&self, x: &Array2<T>) -> Result<Array2<T>> {
        self.check(x)?;
        let mut out = x.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (lo, hi) = (self.min[j], self.max[j]);
            let span = hi - lo;
            col.mapv_inplace(|v| {
                if span <= T::zero() {
                    T::zero()
                } else {
                    ((v - lo) / span).max(T::zero()).min(T::one())
                }
            });
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, x: &Array2<T>) -> Result<Array2<T>> {
        self.check(x)?;
        let mut out = x.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (lo, hi) = (self.min[j], self.max[j]);
            col.mapv_inplace(|v| v * (hi - lo) + lo);
        }
        Ok(out)
    }
}
