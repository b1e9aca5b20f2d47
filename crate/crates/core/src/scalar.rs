//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All geometry, fitting, loss and metric code is written against [`Real`],
//! which is implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + FromStr + Send + Sync + 'static
{
    /// Relative tolerance used for geometric degeneracy tests.
    fn degeneracy_eps() -> Self;
}

impl Real for f32 {
    fn degeneracy_eps() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn degeneracy_eps() -> Self {
        1e-10
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts `T` into `f64`.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
