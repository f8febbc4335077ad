//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Converts a literal, panicking only on values the type cannot represent.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
    fn epsilon() -> Self;
}

impl Real for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

/// Numerical thresholds. All of them are relative to the size of the operands
/// they are applied to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Identity checks (Jacobi, antisymmetry, ad-invariance, homomorphism).
    pub identity: T,
    /// Singular value cutoff for rank decisions, relative to the largest one.
    pub rank: T,
    /// Spread allowed when a ratio is asserted to be constant.
    pub ratio_spread: T,
}

impl<T: Real> Tolerances<T> {
    pub fn new(identity: f64, rank: f64, ratio_spread: f64) -> Self {
        Self {
            identity: T::lit(identity),
            rank: T::lit(rank),
            ratio_spread: T::lit(ratio_spread),
        }
    }

    /// Loose thresholds that single precision can meet.
    pub fn single() -> Self {
        Self::new(1e-4, 1e-5, 1e-4)
    }
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self::new(1e-10, 1e-10, 1e-8)
    }
}
