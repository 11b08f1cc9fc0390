//! Scalar abstraction for the numeric core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point type usable by losses, risk and solvers.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`.
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    /// Lossy conversion to `f64`.
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Compensated (Knuth TwoSum) accumulator.
///
/// The result is independent of summation order to within a few ulps of the
/// exact sum, which the risk reductions rely on.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<F> {
    sum: F,
    comp: F,
}

impl<F: Scalar> CompensatedSum<F> {
    pub fn new() -> Self {
        Self {
            sum: F::zero(),
            comp: F::zero(),
        }
    }

    /// Branch-free TwoSum step; the rounding error of every addition is
    /// carried in `comp`.
    #[inline]
    pub fn add(&mut self, v: F) {
        let t = self.sum + v;
        let bp = t - self.sum;
        self.comp += (self.sum - (t - bp)) + (v - bp);
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> F {
        self.sum + self.comp
    }

    /// Merge a partial sum produced elsewhere (e.g. by another thread).
    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<F: Scalar>(it: impl IntoIterator<Item = F>) -> F {
    let mut acc = CompensatedSum::new();
    for v in it {
        acc.add(v);
    }
    acc.value()
}

/// Euclidean norm with a compensated sum of squares.
pub fn norm2<F: Scalar>(v: &[F]) -> F {
    compensated_sum(v.iter().map(|&x| x * x)).sqrt()
}

pub fn norm1<F: Scalar>(v: &[F]) -> F {
    compensated_sum(v.iter().map(|&x| x.abs()))
}

pub fn distance<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    compensated_sum(a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y))).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let terms = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(terms), 2.0);
        let naive: f64 = terms.iter().sum();
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn sum_is_order_independent() {
        let mut terms: Vec<f64> = (0..1000).map(|i| ((i as f64) * 0.37).sin() * 10f64.powi(i % 7)).collect();
        let a = compensated_sum(terms.iter().copied());
        terms.reverse();
        let b = compensated_sum(terms.iter().copied());
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn merge_matches_single_pass() {
        let terms: Vec<f64> = (0..200).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let mut left = CompensatedSum::new();
        let mut right = CompensatedSum::new();
        for (i, &t) in terms.iter().enumerate() {
            if i < 77 { left.add(t) } else { right.add(t) }
        }
        left.merge(&right);
        assert!((left.value() - compensated_sum(terms)).abs() < 1e-15);
    }

    #[test]
    fn norms() {
        assert_eq!(norm2(&[3.0f64, 4.0]), 5.0);
        assert_eq!(norm1(&[3.0f32, -4.0]), 7.0);
        assert_eq!(distance(&[1.0f64, 1.0], &[4.0, 5.0]), 5.0);
    }
}
