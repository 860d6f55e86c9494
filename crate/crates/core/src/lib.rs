//! Toeplitz covariance estimation from multi-sensor samples, tail-bound
//! evaluators for the estimation error, and a whitened GLRT detector for a
//! single source in temporally correlated noise.
//!
//! Module map:
//! - [`toeplitz`] and [`linalg`]: Toeplitz matrices, spectral symbol, Hermitian
//!   square roots, norms and inverses.
//! - [`model`]: seeded noise, source and observation generation.
//! - [`estimators`]: biased/unbiased correlograms (direct and FFT paths).
//! - [`bounds`]: leading-order exponents and the Marchenko-Pastur edge.
//! - [`detector`]: whitening, GLRT statistic, thresholds.
//! - [`experiments`]: Monte Carlo campaigns with CSV output.

pub mod bounds;
pub mod detector;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod model;
pub mod parallel;
pub mod seed;
pub mod selftest;
pub mod toeplitz;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
