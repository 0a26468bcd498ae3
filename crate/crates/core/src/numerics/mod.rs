//! Special functions and deterministic quadrature shared by the analytical
//! modules.

mod bessel;
mod marcum;
mod quadrature;
mod signed_log;

pub use bessel::{log_bessel_i, log_bessel_i_ladder};
pub use marcum::{marcum_q1, marcum_q1_pair};
pub use quadrature::{gauss_legendre, integrate, Integral, Interval, PanelRule, QuadratureSpec};
pub use signed_log::{signed_log_sum, SignedLogAccumulator, SignedLogValue};

use crate::error::{Error, Result};

/// Truncation of the double Bessel series of the trivariate Rician density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTruncation {
    pub max_q: usize,
    pub max_p: usize,
    pub term_rel_tol: f64,
}

impl SeriesTruncation {
    /// Number of consecutive negligible terms required before a sum is
    /// considered converged.
    pub const QUIET_RUN: usize = 20;

    pub fn new(max_q: usize, max_p: usize, term_rel_tol: f64) -> Result<Self> {
        let t = Self {
            max_q,
            max_p,
            term_rel_tol,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_q < 1 || self.max_p < 1 {
            return Err(Error::domain(
                "series truncation needs max_q >= 1 and max_p >= 1",
            ));
        }
        if !(self.term_rel_tol > 0.0 && self.term_rel_tol < 1.0) {
            return Err(Error::domain("term_rel_tol must lie in (0, 1)"));
        }
        Ok(())
    }
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        Self {
            max_q: 60,
            max_p: 60,
            term_rel_tol: 1e-12,
        }
    }
}
