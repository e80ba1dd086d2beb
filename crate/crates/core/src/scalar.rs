//! Scalar abstraction shared by every numerical module.
//!
//! The algorithms are written once against [`Scalar`] and instantiated for
//! `f64` (the reference precision, used by the CLI and the test-suite) and
//! `f32`. Tolerances live in a single table per precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Tolerances used by validation and solver checks, stored in `f64` and
/// converted on use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of the total weight of a cloud from 1.
    pub normalization: f64,
    /// Allowed deviation of plan row/column sums from the cloud weights.
    pub marginal: f64,
    /// Agreement between two independent transport solvers.
    pub agreement: f64,
    /// Two matchings whose costs differ by less than this are treated as tied.
    pub tie: f64,
    /// Two weights closer than this (relative) count as equal.
    pub weight_equality: f64,
}

pub const F64_TOLERANCES: Tolerances = Tolerances {
    normalization: 1e-12,
    marginal: 1e-10,
    agreement: 1e-9,
    tie: 1e-12,
    weight_equality: 1e-13,
};

pub const F32_TOLERANCES: Tolerances = Tolerances {
    normalization: 1e-5,
    marginal: 1e-5,
    agreement: 1e-4,
    tie: 1e-6,
    weight_equality: 1e-6,
};

/// Real floating point type the library is generic over.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    const TOLERANCES: Tolerances;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(value: usize) -> Self {
        Self::from_usize(value).expect("usize representable in scalar type")
    }
}

impl Scalar for f64 {
    const TOLERANCES: Tolerances = F64_TOLERANCES;
}

impl Scalar for f32 {
    const TOLERANCES: Tolerances = F32_TOLERANCES;
}

/// Squared Euclidean distance between two equal-length slices.
#[inline]
pub fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, v| acc + v)
}

/// Trapezoid weights on a uniform grid of `nodes` points (½ at both ends).
pub fn trapezoid_weights<T: Scalar>(nodes: usize) -> Vec<T> {
    let half = T::lit(0.5);
    (0..nodes)
        .map(|k| if k == 0 || k + 1 == nodes { half } else { T::one() })
        .collect()
}

/// Trapezoidal integral of uniformly sampled values with spacing `dt`.
pub fn trapezoid<T: Scalar>(values: &[T], dt: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let w = trapezoid_weights::<T>(n);
            values.iter().zip(&w).fold(T::zero(), |acc, (&v, &w)| acc + v * w) * dt
        }
    }
}
