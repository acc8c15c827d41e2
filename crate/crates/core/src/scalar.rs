//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar type the solver is generic over (implemented for `f32` and `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for constants and random draws.
    fn of(v: f64) -> Self;

    fn of_usize(v: usize) -> Self;

    fn as_f64(self) -> f64;

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::of(0.5)
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn of(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn of_usize(v: usize) -> Self {
                v as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Shortest round-trip text for `v`, switching to exponent form outside `[1e-4, 1e15)`.
pub fn format_number<F: Scalar>(v: F) -> String {
    let a = v.abs();
    if a != F::zero() && a.is_finite() && (a < F::of(1e-4) || a >= F::of(1e15)) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Inner product of two equal-length slices, accumulated left to right.
#[inline]
pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (&u, &v) in a.iter().zip(b) {
        acc += u * v;
    }
    acc
}

/// Maximum absolute entry; zero for an empty slice.
pub fn norm_inf<F: Scalar>(v: &[F]) -> F {
    v.iter().fold(F::zero(), |m, &x| m.max(x.abs()))
}
