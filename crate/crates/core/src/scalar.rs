//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::Float;
use rand::distr::uniform::SampleUniform;
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

/// Floating-point scalar type for reservoirs, readouts and metrics.
///
/// Implemented for `f32` and `f64`. The bound combines `num_traits::Float`
/// (elementary functions, comparisons, casts) with `nalgebra::RealField`
/// (matrix factorizations) and uniform sampling support.
pub trait Real: RealField + Float + SampleUniform + Copy + Send + Sync {
    /// One draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

/// Lossy conversion from `f64`, for constants and tolerances.
#[inline]
pub fn conv<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("finite f64 converts into any Real scalar")
}

/// Widening conversion to `f64`, for reporting and RNG plumbing.
#[inline]
pub fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().expect("Real scalars convert to f64")
}
