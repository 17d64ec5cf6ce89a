//! Floating-point scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Every tolerance in the library is expressed through [`Scalar::tol`] so that the
/// same algorithm can run in single precision with thresholds scaled to the type.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
{
    /// Factor applied to `f64` tolerances when running at this precision.
    const TOL_SCALE: f64;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    /// Converts back to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// An `f64`-calibrated tolerance rescaled for this precision.
    #[inline]
    fn tol(x: f64) -> Self {
        Self::of(x * Self::TOL_SCALE)
    }
}

impl Scalar for f64 {
    const TOL_SCALE: f64 = 1.0;
}

// f32 has ~2^29 times the unit roundoff of f64; 1e4 keeps 1e-8 style checks meaningful.
impl Scalar for f32 {
    const TOL_SCALE: f64 = 1e4;
}
