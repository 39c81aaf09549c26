use crate::error::{Error, Result};
use crate::scalar::Real;

fn residuals<'a, T: Real>(y_true: &'a [T], y_pred: &'a [T]) -> Result<impl Iterator<Item = T> + 'a> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::InvalidMetricInput(format!(
            "need equal non-empty lengths, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.iter().chain(y_pred).any(|v| !v.is_finite()) {
        return Err(Error::InvalidMetricInput("non-finite value".into()));
    }
    Ok(y_true.iter().zip(y_pred).map(|(&t, &p)| p - t))
}

pub fn mae<T: Real>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    let n = T::from_usize_lossy(y_true.len());
    Ok(residuals(y_true, y_pred)?.map(|d| d.abs()).sum::<T>() / n)
}

pub fn mse<T: Real>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    let n = T::from_usize_lossy(y_true.len());
    Ok(residuals(y_true, y_pred)?.map(|d| d * d).sum::<T>() / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_arithmetic() {
        assert_eq!(mae(&[1.0, 3.0], &[0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(mse(&[1.0, 3.0], &[0.0, 0.0]).unwrap(), 5.0);
        assert_eq!(mae(&[1.0, 3.0], &[1.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn mean_predictor_mse_is_population_variance() {
        let y = [2.0, 7.0, 7.0, 11.0, 12.0, 4.0];
        let mean = y.iter().sum::<f64>() / 6.0;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 6.0;
        assert!((mse(&y, &[mean; 6]).unwrap() - var).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mae::<f64>(&[], &[]).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[1.0], &[f64::NAN]).is_err());
    }
}
