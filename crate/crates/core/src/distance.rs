//! The Rician law of the inter-node distance and the steady-state link
//! probability.

use crate::error::{Error, Result};
use crate::mobility::OUParams;
use crate::numerics::{log_bessel_i, marcum_q1_pair};

/// Distance law `Rician(nu, sqrt(g))`: `nu` is the separation of the
/// desired positions and `g` the per-axis variance of the difference
/// process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianLaw {
    pub nu: f64,
    pub g: f64,
}

impl RicianLaw {
    pub fn new(nu: f64, g: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::domain(format!(
                "noncentrality must be >= 0, got {nu}"
            )));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::domain(format!("variance must be > 0, got {g}")));
        }
        Ok(Self { nu, g })
    }

    /// Law of the distance at time `t` after both nodes start at their
    /// desired positions.
    pub fn at_time(t: f64, beta: f64, params: &OUParams) -> Result<Self> {
        Self::new(beta, g_of_t(t, params)?)
    }

    /// Stationary law, `g = D tau` exactly.
    pub fn stationary(beta: f64, params: &OUParams) -> Result<Self> {
        Self::new(beta, params.diffusion() * params.tau)
    }

    pub fn scale(&self) -> f64 {
        self.g.sqrt()
    }
}

/// Per-axis variance of the difference process, `D tau (1 - exp(-2t/tau))`.
pub fn g_of_t(t: f64, params: &OUParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    Ok(params.diffusion() * params.tau * -(-2.0 * t / params.tau).exp_m1())
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!("distance must be >= 0, got {r}")));
    }
    Ok(())
}

/// Natural log of the Rician density.
pub fn ln_rician_pdf(r: f64, law: &RicianLaw) -> Result<f64> {
    check_r(r)?;
    if r == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if r.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let RicianLaw { nu, g } = *law;
    Ok(r.ln() - g.ln() - (r * r + nu * nu) / (2.0 * g) + log_bessel_i(0, nu * r / g)?)
}

pub fn rician_pdf(r: f64, law: &RicianLaw) -> Result<f64> {
    Ok(ln_rician_pdf(r, law)?.exp())
}

/// `P(R <= r) = 1 - Q_1(nu / sqrt(g), r / sqrt(g))`.
pub fn rician_cdf(r: f64, law: &RicianLaw) -> Result<f64> {
    check_r(r)?;
    if r.is_infinite() {
        return Ok(1.0);
    }
    let s = law.scale();
    let (_, lower) = marcum_q1_pair(law.nu / s, r / s)?;
    Ok(lower)
}

/// Stationary link probabilities `[P(L = 0), P(L = 1)]` of the hard
/// connection model with range `r0`.
pub fn steady_state_link_prob(beta: f64, params: &OUParams, r0: f64) -> Result<[f64; 2]> {
    if !(r0 > 0.0) {
        return Err(Error::domain(format!(
            "connection range must be > 0, got {r0}"
        )));
    }
    let law = RicianLaw::stationary(beta, params)?;
    if r0.is_infinite() {
        return Ok([0.0, 1.0]);
    }
    let s = law.scale();
    let (upper, lower) = marcum_q1_pair(law.nu / s, r0 / s)?;
    Ok([upper, lower])
}
