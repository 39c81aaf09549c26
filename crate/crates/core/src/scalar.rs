//! Scalar abstraction shared by every numeric kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
///
/// Missing cells are represented by NaN throughout, so only IEEE floating
/// point types qualify.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + ndarray::ScalarOperand
    + 'static
{
    /// Lossy conversion from an `f64` literal or configuration value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 always converts to a float type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize always converts to a float type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float always converts to f64")
    }

    /// Marker used for a missing cell.
    #[inline]
    fn missing() -> Self {
        Self::nan()
    }

    #[inline]
    fn is_missing(self) -> bool {
        self.is_nan()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Serde adapter writing NaN cells of a matrix as `null`, since JSON has no NaN.
pub mod serde_nan_matrix {
    use ndarray::Array2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Real;

    #[derive(Serialize, Deserialize)]
    #[serde(bound = "")]
    struct Repr<T: Real> {
        shape: [usize; 2],
        data: Vec<Option<T>>,
    }

    pub fn serialize<T: Real, S: Serializer>(m: &Array2<T>, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            shape: [m.nrows(), m.ncols()],
            data: m.iter().map(|&v| (!v.is_missing()).then_some(v)).collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, T: Real, D: Deserializer<'de>>(d: D) -> Result<Array2<T>, D::Error> {
        let r = Repr::<T>::deserialize(d)?;
        let data = r.data.into_iter().map(|v| v.unwrap_or_else(T::missing)).collect();
        Array2::from_shape_vec((r.shape[0], r.shape[1]), data).map_err(serde::de::Error::custom)
    }
}
