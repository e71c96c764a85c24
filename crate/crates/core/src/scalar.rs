//! Floating-point scalar abstraction shared by the numerical kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used by the dense, chain, simplex and ontological-model kernels.
///
/// Implemented for `f32` and `f64`. Tolerances that are quoted for double
/// precision go through [`Real::tol`], which never lets a threshold drop
/// below a small multiple of the type's machine epsilon.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// A tolerance of `x` (stated for f64), floored at `64 * epsilon`.
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(64.0))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

pub(crate) fn cast_complex<T: Real>(z: Complex<f64>) -> C<T> {
    Complex::new(T::lit(z.re), T::lit(z.im))
}
