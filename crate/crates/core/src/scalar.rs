//! Numeric abstraction shared by the LP, max-flow and decomposition code.
//!
//! Everything downstream of the LP is generic over [`Scalar`], so the same
//! pipeline runs in `f64` (the default), in `f32`, or exactly over
//! [`BigRational`]. Each implementation carries its own tolerance set; the
//! exact type uses zero tolerances throughout.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone + Debug + PartialOrd + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// True when arithmetic is exact and every tolerance is zero.
    const EXACT: bool;

    /// Magnitude below which a tableau entry is not used as a pivot.
    fn pivot_tolerance() -> Self;

    /// Row satisfaction tolerance for LP solutions.
    fn lp_tolerance() -> Self;

    /// Minimum violation for a cut to be reported by separation.
    fn separation_tolerance() -> Self;

    /// Residual capacity treated as zero by max-flow.
    fn flow_tolerance() -> Self;

    /// Residual treated as zero by flow decomposition.
    fn decomposition_tolerance() -> Self;

    /// Objective tolerance used when comparing against bounds.
    fn objective_tolerance() -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn pivot_tolerance() -> Self {
        1e-9
    }
    fn lp_tolerance() -> Self {
        1e-7
    }
    fn separation_tolerance() -> Self {
        1e-6
    }
    fn flow_tolerance() -> Self {
        1e-9
    }
    fn decomposition_tolerance() -> Self {
        1e-6
    }
    fn objective_tolerance() -> Self {
        1e-5
    }
    fn approx_f64(&self) -> f64 {
        *self
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn pivot_tolerance() -> Self {
        1e-5
    }
    fn lp_tolerance() -> Self {
        1e-4
    }
    fn separation_tolerance() -> Self {
        1e-3
    }
    fn flow_tolerance() -> Self {
        1e-5
    }
    fn decomposition_tolerance() -> Self {
        1e-4
    }
    fn objective_tolerance() -> Self {
        1e-3
    }
    fn approx_f64(&self) -> f64 {
        f64::from(*self)
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn pivot_tolerance() -> Self {
        BigRational::zero()
    }
    fn lp_tolerance() -> Self {
        BigRational::zero()
    }
    fn separation_tolerance() -> Self {
        BigRational::zero()
    }
    fn flow_tolerance() -> Self {
        BigRational::zero()
    }
    fn decomposition_tolerance() -> Self {
        BigRational::zero()
    }
    fn objective_tolerance() -> Self {
        BigRational::zero()
    }
    fn from_count(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}

/// `a > b + tol`, the comparison used for every "strictly positive" test.
pub(crate) fn exceeds<T: Scalar>(a: &T, b: &T, tol: &T) -> bool {
    *a > b.clone() + tol.clone()
}

pub(crate) fn min_of<T: Scalar>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

pub(crate) fn sum<'a, T: Scalar, I: IntoIterator<Item = &'a T>>(items: I) -> T {
    items
        .into_iter()
        .fold(T::zero(), |acc, v| acc + v.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn exact_type_has_zero_tolerances() {
        assert!(BigRational::lp_tolerance().is_zero());
        assert!(BigRational::flow_tolerance().is_zero());
        assert_eq!(BigRational::from_count(7), BigRational::from_integer(7.into()));
        assert!(BigRational::EXACT && !f64::EXACT);
    }

    #[test]
    fn helpers() {
        assert!(exceeds(&1.0f64, &0.5, &0.1));
        assert!(!exceeds(&0.55f64, &0.5, &0.1));
        assert_eq!(min_of(3.0f64, 2.0), 2.0);
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(sum([half.clone(), half].iter()), BigRational::one());
        assert_eq!(1.5f32.approx_f64(), 1.5);
    }
}
