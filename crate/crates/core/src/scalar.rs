//! Floating-point abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used throughout the solver stack: `f32` or `f64`.
///
/// The associated constants carry precision-dependent defaults so generic code
/// never hard-codes an `f64` epsilon.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Default KKT tolerance for subproblem solves.
    const DEFAULT_TOL: f64;
    /// Smallest tableau entry accepted as a pivot.
    const PIVOT_TOL: f64;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn default_tol() -> Self {
        Self::lit(Self::DEFAULT_TOL)
    }

    #[inline]
    fn pivot_tol() -> Self {
        Self::lit(Self::PIVOT_TOL)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const DEFAULT_TOL: f64 = 1e-9;
    const PIVOT_TOL: f64 = 1e-9;
}

impl Scalar for f32 {
    const DEFAULT_TOL: f64 = 1e-4;
    const PIVOT_TOL: f64 = 1e-5;
}

/// Max-norm of a slice; zero for an empty slice.
pub fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}
