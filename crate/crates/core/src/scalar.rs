//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
///
/// Tolerances in this crate are written for `f64`. Routines that need a
/// threshold go through [`Real::tol`], which never lets a threshold fall below
/// a small multiple of the type's epsilon, so the same code stays meaningful
/// in single precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// A threshold of `x`, raised to `64·ε` when the type cannot resolve `x`.
    #[inline]
    fn tol(x: f64) -> Self {
        Self::c(x).max(Self::epsilon() * Self::c(64.0))
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Central-difference step size appropriate for the precision.
    #[inline]
    fn fd_step() -> Self {
        Self::c(1e-5).max(Self::epsilon().cbrt())
    }
}

impl Real for f32 {}
impl Real for f64 {}
