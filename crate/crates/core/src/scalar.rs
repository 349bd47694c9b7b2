//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar type the fitting and statistics code is generic over.
///
/// Implemented for `f32` and `f64`. Everything that touches files or
/// reports works in `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    /// Conversion from a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

/// Logistic function, evaluated without overflow for either sign of `eta`.
#[inline]
pub fn sigmoid<T: Scalar>(eta: T) -> T {
    if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    }
}

/// `ln(p / (1 - p))`.
#[inline]
pub fn logit<T: Scalar>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

/// `ln(1 + exp(t))` without overflow.
#[inline]
pub fn softplus<T: Scalar>(t: T) -> T {
    t.max(T::zero()) + (-t.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_and_logit_are_inverse() {
        for &p in &[1e-9, 0.01, 0.3, 0.5, 0.77, 0.999] {
            let back: f64 = sigmoid(logit(p));
            assert!((back - p).abs() < 1e-15 * p.max(1e-3) * 1e3);
        }
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(-800.0f64) >= 0.0);
        assert_eq!(sigmoid(800.0f64), 1.0);
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for &t in &[-20.0f64, -1.5, 0.0, 2.0, 30.0] {
            let naive = (1.0 + t.exp()).ln();
            assert!((softplus(t) - naive).abs() < 1e-12);
        }
        assert_eq!(softplus(1000.0f64), 1000.0);
    }
}
