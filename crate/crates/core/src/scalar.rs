//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the networks, tables and estimators are generic over.
///
/// Implemented for `f32` and `f64`. Everything that ships with a default alias
/// (see the crate root) uses `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Infallible for the float types we implement.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }

    /// Tolerance for "sums to one" checks, loosened for low precision types.
    fn simplex_tolerance(dim: usize) -> Self {
        let eps = Self::epsilon() * Self::lit(16.0 * dim.max(1) as f64);
        eps.max(Self::lit(1e-9))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Floor applied before every logarithm of a probability.
pub const LOG_FLOOR: f64 = 1e-12;

/// Neumaier-compensated sum, used where long accumulations feed reported means.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut sum = T::zero();
    let mut c = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
