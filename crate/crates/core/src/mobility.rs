//! Ornstein-Uhlenbeck mobility: moments, exact AR(1) stepping and stationary
//! sampling of two independent nodes on the plane.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Parameters of one node's OU mobility. Both coordinates share `tau` and
/// `sqrt_d`; each axis reverts to its own desired position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OUParams {
    /// Relaxation time [s].
    pub tau: f64,
    /// Square root of the diffusion coefficient [m/sqrt(s)].
    pub sqrt_d: f64,
    /// Desired position [m].
    pub mu_x: f64,
    pub mu_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl OUParams {
    pub fn new(tau: f64, sqrt_d: f64, mu_x: f64, mu_y: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::domain(format!("tau must be > 0, got {tau}")));
        }
        if !(sqrt_d > 0.0 && sqrt_d.is_finite()) {
            return Err(Error::domain(format!("sqrt_d must be > 0, got {sqrt_d}")));
        }
        if !(mu_x.is_finite() && mu_y.is_finite()) {
            return Err(Error::domain("desired position must be finite"));
        }
        Ok(Self {
            tau,
            sqrt_d,
            mu_x,
            mu_y,
        })
    }

    /// Node parked at the origin.
    pub fn centered(tau: f64, sqrt_d: f64) -> Result<Self> {
        Self::new(tau, sqrt_d, 0.0, 0.0)
    }

    pub fn diffusion(&self) -> f64 {
        self.sqrt_d * self.sqrt_d
    }

    /// Stationary per-axis variance `D tau / 2`.
    pub fn stationary_variance(&self) -> f64 {
        0.5 * self.diffusion() * self.tau
    }

    pub fn mu(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.mu_x,
            Axis::Y => self.mu_y,
        }
    }

    pub fn with_mu(self, mu_x: f64, mu_y: f64) -> Self {
        Self { mu_x, mu_y, ..self }
    }
}

/// Mean and variance of one coordinate at time `t` given the start `s0`.
pub fn ou_moments(t: f64, s0: f64, params: &OUParams, axis: Axis) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    let mu = params.mu(axis);
    let mean = mu + (s0 - mu) * (-t / params.tau).exp();
    let var = params.stationary_variance() * -(-2.0 * t / params.tau).exp_m1();
    Ok((mean, var))
}

/// AR(1) coefficient `exp(-dt / tau)` of the sampled process.
pub fn ar1_coeff(dt: f64, tau: f64) -> Result<f64> {
    if !(dt > 0.0 && tau > 0.0) || !dt.is_finite() || !tau.is_finite() {
        return Err(Error::domain(format!(
            "ar1_coeff needs dt > 0 and tau > 0, got dt={dt} tau={tau}"
        )));
    }
    let phi = (-dt / tau).exp();
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::domain(format!(
            "dt/tau = {} puts the AR(1) coefficient outside (0, 1)",
            dt / tau
        )));
    }
    Ok(phi)
}

/// One exact transition of the sampled OU process over `dt`, driven by the
/// standard normal draw `noise`.
pub fn step(s_prev: f64, params: &OUParams, dt: f64, noise: f64, axis: Axis) -> Result<f64> {
    let phi = ar1_coeff(dt, params.tau)?;
    Ok(step_with(
        s_prev,
        params.mu(axis),
        phi,
        innovation_sd(params, dt),
        noise,
    ))
}

/// Standard deviation of the one-step innovation, `sqrt(D tau (1 - phi^2) / 2)`.
pub fn innovation_sd(params: &OUParams, dt: f64) -> f64 {
    (params.stationary_variance() * -(-2.0 * dt / params.tau).exp_m1()).sqrt()
}

#[inline]
fn step_with(s_prev: f64, mu: f64, phi: f64, sd: f64, noise: f64) -> f64 {
    phi * s_prev + mu * (1.0 - phi) + sd * noise
}

/// [`step`] with the coefficients for a fixed `dt` and axis precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stepper {
    phi: f64,
    sd: f64,
    mu: f64,
}

impl Stepper {
    pub fn new(params: &OUParams, dt: f64, axis: Axis) -> Result<Self> {
        Ok(Self {
            phi: ar1_coeff(dt, params.tau)?,
            sd: innovation_sd(params, dt),
            mu: params.mu(axis),
        })
    }

    #[inline]
    pub fn advance(&self, s_prev: f64, noise: f64) -> f64 {
        step_with(s_prev, self.mu, self.phi, self.sd, noise)
    }
}

/// Draw from the stationary law `N(mu, D tau / 2)` of one coordinate.
pub fn sample_stationary<R: Rng + ?Sized>(params: &OUParams, rng: &mut R, axis: Axis) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    params.mu(axis) + params.stationary_variance().sqrt() * z
}

/// Two nodes with their own OU parameters. The usual setup parks node 1 at
/// the origin and node 2 at `(beta, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConfig {
    pub nodes: [OUParams; 2],
}

impl PairConfig {
    /// Both nodes share `tau` and `sqrt_d`; desired positions `(0, 0)` and
    /// `(beta, 0)`.
    pub fn new(tau: f64, sqrt_d: f64, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("beta must be >= 0, got {beta}")));
        }
        let base = OUParams::centered(tau, sqrt_d)?;
        Ok(Self {
            nodes: [base, base.with_mu(beta, 0.0)],
        })
    }

    pub fn from_params(params: &OUParams, beta: f64) -> Result<Self> {
        Self::new(params.tau, params.sqrt_d, beta)
    }

    /// Separation of the desired positions along x.
    pub fn beta(&self) -> f64 {
        self.nodes[1].mu_x - self.nodes[0].mu_x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub x: f64,
    pub y: f64,
}

/// Uniformly sampled states of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<NodeState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTrajectory {
    pub first: Trajectory,
    pub second: Trajectory,
}

impl PairTrajectory {
    pub fn distances(&self) -> Vec<f64> {
        self.first
            .states
            .iter()
            .zip(&self.second.states)
            .map(|(a, b)| (b.x - a.x).hypot(b.y - a.y))
            .collect()
    }

    /// CSV dump with header `step,x1,y1,x2,y2,r`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,x1,y1,x2,y2,r")?;
        for (k, (a, b)) in self
            .first
            .states
            .iter()
            .zip(&self.second.states)
            .enumerate()
        {
            let r = (b.x - a.x).hypot(b.y - a.y);
            writeln!(w, "{k},{},{},{},{},{}", a.x, a.y, b.x, b.y, r)?;
        }
        Ok(())
    }
}

/// Simulates both nodes for `k` sampling instants (the initial state is the
/// first one). With `stationary_start` every coordinate starts from its
/// stationary law; otherwise nodes start at their desired positions.
///
/// Draws are taken in the order x1, y1, x2, y2 at every instant.
pub fn simulate_pair<R: Rng + ?Sized>(
    config: &PairConfig,
    dt: f64,
    k: usize,
    rng: &mut R,
    stationary_start: bool,
) -> Result<PairTrajectory> {
    if k == 0 {
        return Err(Error::domain("need at least one sampling instant"));
    }
    let mut steppers = [(0.0, 0.0); 2];
    for (slot, p) in steppers.iter_mut().zip(&config.nodes) {
        *slot = (ar1_coeff(dt, p.tau)?, innovation_sd(p, dt));
    }
    let mut tracks: [Vec<NodeState>; 2] = [Vec::with_capacity(k), Vec::with_capacity(k)];
    let mut current = [NodeState { x: 0.0, y: 0.0 }; 2];
    for (i, p) in config.nodes.iter().enumerate() {
        current[i] = if stationary_start {
            NodeState {
                x: sample_stationary(p, rng, Axis::X),
                y: sample_stationary(p, rng, Axis::Y),
            }
        } else {
            NodeState {
                x: p.mu_x,
                y: p.mu_y,
            }
        };
        tracks[i].push(current[i]);
    }
    for _ in 1..k {
        for (i, p) in config.nodes.iter().enumerate() {
            let (phi, sd) = steppers[i];
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            current[i] = NodeState {
                x: step_with(current[i].x, p.mu_x, phi, sd, zx),
                y: step_with(current[i].y, p.mu_y, phi, sd, zy),
            };
            tracks[i].push(current[i]);
        }
    }
    let [first, second] = tracks;
    Ok(PairTrajectory {
        first: Trajectory { dt, states: first },
        second: Trajectory { dt, states: second },
    })
}

/// Inter-node distances `R_{t_1}, ..., R_{t_k}`.
pub fn simulate_distance_sequence<R: Rng + ?Sized>(
    config: &PairConfig,
    dt: f64,
    k: usize,
    rng: &mut R,
    stationary_start: bool,
) -> Result<Vec<f64>> {
    Ok(simulate_pair(config, dt, k, rng, stationary_start)?.distances())
}
