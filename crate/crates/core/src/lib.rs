//! Link stability between two nodes moving under Ornstein-Uhlenbeck mobility.
//!
//! The crate computes the two-state Markov model of a hard-threshold wireless
//! link, its entropy rate and the mutual-information test of the first-order
//! Markov assumption, and cross-checks every quantity against a Monte Carlo
//! simulation of the underlying mobility.
//!
//! Module layout:
//!
//! - [`numerics`]: log-domain Bessel functions, Marcum Q, signed log sums and
//!   tensor-product Gauss-Legendre quadrature.
//! - [`mobility`]: OU moments, exact AR(1) stepping and stationary sampling.
//! - [`distance`]: the Rician law of the inter-node distance.
//! - [`jointdist`]: lag covariance and the trivariate Rician density.
//! - [`linkmodel`]: transition matrix, joint pmf, entropy rate, MI ratio.
//! - [`montecarlo`]: the independent simulation oracle.
//! - [`experiment`] and [`plot`]: parameter sweeps, validation reports, SVG.

pub mod distance;
pub mod error;
pub mod experiment;
pub mod jointdist;
pub mod linkmodel;
pub mod mobility;
pub mod montecarlo;
pub mod numerics;
pub mod plot;

pub use error::{Error, Result};
