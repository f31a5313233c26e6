//! Scalar abstraction for the solver stack.
//!
//! Everything numeric in this crate is generic over a real floating-point
//! type; complex arithmetic is layered on top via [`num_complex::Complex`].
//! Use `f64` for production runs, `f32` mostly to check that nothing secretly
//! depends on double precision.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Real scalar type the library is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Send
    + Sync
    + Display
    + LowerExp
    + Debug
    + Default
    + 'static
{
    /// Convert an `f64` literal, panicking only on NaN-free conversion failure
    /// (which cannot happen for finite literals and `f32`/`f64`).
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate's real scalar.
pub type Cx<T> = Complex<T>;

#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

/// |z|^2 without the square root.
#[inline]
pub fn abs_sq<T: Real>(z: Cx<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// Complex magnitude via hypot (overflow-safe).
#[inline]
pub fn magnitude<T: Real>(z: Cx<T>) -> T {
    z.re.hypot(z.im)
}
