//! Floating-point abstraction shared by the transform, the node model and the
//! pyramid engine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Real scalar used throughout the crate: `f32` or `f64`.
///
/// Besides the usual arithmetic this carries the few special functions and
/// random variates the conjugate computations need, so generic code never has
/// to name a concrete float type.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Natural log of the gamma function for positive arguments.
    fn log_gamma(self) -> Self;

    /// One standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One Gamma(`shape`, 1) variate.
    fn standard_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self;

    /// Lossless-enough conversion from an `f64` constant.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f64 {
    fn log_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self)
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn standard_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
        Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
    }
}

impl Real for f32 {
    fn log_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self as f64) as f32
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn standard_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
        Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
    }
}

/// `log(exp(a) + exp(b))` without overflow; `-inf` is the additive identity.
#[inline]
pub fn log_add_exp<T: Real>(a: T, b: T) -> T {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == T::neg_infinity() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Max-shifted log-sum-exp over a slice; empty or all `-inf` gives `-inf`.
pub fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    if max == T::infinity() {
        return max;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}
