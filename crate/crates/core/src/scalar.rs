use ndarray::NdFloat;
use num_traits::FromPrimitive;

/// Floating-point element type of every vector and parameter in the crate.
///
/// Implemented for `f32` and `f64`. Random draws are produced in `f64` and
/// narrowed with [`Scalar::of`].
pub trait Scalar: NdFloat + FromPrimitive + Default {
    /// Converts an `f64` constant; panics only if the target cannot represent
    /// finite `f64` values, which never happens for `f32`/`f64`.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: NdFloat + FromPrimitive + Default {}
