use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};
use serde::Serialize;

/// Floating-point element type for every score computation in this crate.
///
/// Implemented for `f32` and `f64`. The tolerances are per-type because a
/// simplex produced by a 32-bit softmax cannot sum to one within `1e-9`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Serialize + Send + Sync + 'static
{
    /// Allowed deviation of a probability vector's sum from one.
    const SIMPLEX_TOLERANCE: f64;
    /// Entries down to `-NEGATIVE_SLACK` are accepted and clamped to zero.
    const NEGATIVE_SLACK: f64;
    /// Bound on the normalized cross product for projective equality.
    const PROJECTIVE_TOLERANCE: f64;

    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in every Scalar")
    }
}

impl Scalar for f64 {
    const SIMPLEX_TOLERANCE: f64 = 1e-9;
    const NEGATIVE_SLACK: f64 = 1e-12;
    const PROJECTIVE_TOLERANCE: f64 = 1e-12;
}

impl Scalar for f32 {
    const SIMPLEX_TOLERANCE: f64 = 1e-5;
    const NEGATIVE_SLACK: f64 = 1e-7;
    const PROJECTIVE_TOLERANCE: f64 = 1e-6;
}
