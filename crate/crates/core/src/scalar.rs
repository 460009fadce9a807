//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};

/// Real floating-point type the toolkit is generic over (`f32` or `f64`).
///
/// All coefficient data is complex; `Real` only fixes the precision of the
/// real and imaginary parts.
pub trait Real:
    Float + FloatConst + NumAssign + Sum + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literal constants.
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal representable")
    }

    /// Conversion from a count.
    fn of(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("count representable")
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex coefficient type.
pub type C<T> = Complex<T>;

#[inline]
pub fn re<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub fn im<T: Real>(x: T) -> C<T> {
    Complex::new(T::zero(), x)
}

/// `1 / (2 pi i)`.
#[inline]
pub fn inv_two_pi_i<T: Real>() -> C<T> {
    // 1/(2 pi i) = -i / (2 pi)
    Complex::new(T::zero(), -T::one() / (T::lit(2.0) * T::PI()))
}

/// `k!` in floating point.
pub fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, m| acc * T::of(m))
}
