//! Scalar abstraction: the numeric kernels are generic over `f32`/`f64`.

use rand::distr::uniform::SampleUniform;
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar usable throughout the crate.
///
/// Bundles the `num_traits` float surface with the sampling hooks the
/// simulator needs, plus per-type numeric tolerances. Solver tolerances are
/// calibrated for `f64`; the `f32` instantiation is functional but loose.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + SampleUniform
    + core::iter::Sum
    + core::fmt::Debug
    + core::fmt::Display
    + core::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Feasibility/pivot tolerance for the simplex solver: tableau entries
    /// with absolute value below this are treated as zero.
    fn lp_tol() -> Self;

    /// One standard-normal variate.
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Shorthand for conversion of literals.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }
}

impl Real for f64 {
    fn lp_tol() -> Self {
        1e-9
    }

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Real for f32 {
    fn lp_tol() -> Self {
        1e-4
    }

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}
