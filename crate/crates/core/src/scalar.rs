//! Scalar abstraction shared by every numerical module.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real floating-point scalar the physics is generic over.
///
/// Implemented for `f32` and `f64`. Thresholds throughout the crate are
/// written for `f64` and rescaled with [`tol`] for coarser types.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// An `f64` tolerance rescaled to the machine precision of `T`.
#[inline]
pub fn tol<T: Real>(x: f64) -> T {
    let ratio = T::default_epsilon() / lit::<T>(f64::EPSILON);
    lit::<T>(x) * ratio
}

/// Lossy conversion to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
