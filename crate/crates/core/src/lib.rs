//! Exact Bayesian wavelet-domain functional ANOVA.
//!
//! Observations are mapped to the wavelet domain with an orthonormal DWT
//! ([`wavelet`]). Every location-scale node carries a normal-inverse-Gamma
//! regression on the factor design ([`nodemodel`]); spike-and-slab indicators
//! for the baseline and for each factor evolve as Markov trees over the node
//! tree. The pyramid engine in [`grove`] computes the exact posterior in one
//! bottom-up pass, from which posterior marginal and joint alternative
//! probabilities, posterior means, and exact Monte Carlo draws follow.
//! [`ebayes`] fits hyperparameters by maximum marginal likelihood,
//! [`decision`] turns node probabilities into FDR-controlled calls, and
//! [`simbench`] generates the standard test functions and scoring tools.
//!
//! Core numerics are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which the fitting and simulation layers use.

pub mod decision;
pub mod ebayes;
pub mod error;
pub mod grove;
pub mod nodemodel;
pub mod scalar;
pub mod simbench;
pub mod wavelet;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Hyper = nodemodel::HyperParams<f64>;
pub type Tree = wavelet::CoefficientTree<f64>;
pub type Filter = wavelet::WaveletFilter<f64>;
pub type Samples = wavelet::Signal<f64>;
pub type Grove = grove::PosteriorGrove<f64>;
pub type Data = grove::GroveData<f64>;
pub type Draw = grove::PosteriorDraw<f64>;
