//! Scalar abstraction.
//!
//! All geometry is written against [`Real`], so the same code runs in `f32`
//! and `f64`. Tolerances in the public configs are stored as `f64` and
//! converted with [`lit`] at the point of use.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating point scalar used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite literal")
}

/// Converts `T` into `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Converts a count into `T`.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("representable count")
}

/// Machine tolerance clamped below by `floor`.
///
/// Lets tolerances written for `f64` degrade gracefully in `f32`.
#[inline]
pub fn tol<T: Real>(requested: f64) -> T {
    let eps = T::epsilon() * lit(16.0);
    let t = lit::<T>(requested);
    if t < eps {
        eps
    } else {
        t
    }
}
