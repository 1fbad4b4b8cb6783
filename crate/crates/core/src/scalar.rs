use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::{Debug, Display};

/// Floating point scalar used throughout the solvers.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {}

#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub(crate) fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
