//! Scalar abstraction and log-domain arithmetic.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar: f32 or f64.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumCast
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossless round-trip through f64 for I/O and RNG plumbing.
    fn from_f64_lossy(v: f64) -> Self {
        num_traits::NumCast::from(v).unwrap()
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::NumCast::from(self).unwrap()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// log(exp(a) + exp(b)) with max-shift; identities with -inf are exact.
pub fn log_add<F: Real>(a: F, b: F) -> F {
    if a == F::neg_infinity() {
        return b;
    }
    if b == F::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// logsumexp over a slice; -inf on empty input.
pub fn log_sum<F: Real>(values: &[F]) -> F {
    let mut acc = F::neg_infinity();
    for &v in values {
        acc = log_add(acc, v);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct_sum() {
        let a: f64 = (0.3f64).ln();
        let b: f64 = (0.4f64).ln();
        assert!((log_add(a, b) - (0.7f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn log_add_neg_infinity_is_identity() {
        let a: f64 = -1.25;
        assert_eq!(log_add(f64::NEG_INFINITY, a), a);
        assert_eq!(log_add(a, f64::NEG_INFINITY), a);
        assert_eq!(
            log_add(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn log_sum_empty_is_zero_mass() {
        let empty: [f64; 0] = [];
        assert_eq!(log_sum(&empty), f64::NEG_INFINITY);
    }
}
