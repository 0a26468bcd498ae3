//! Stationary joint law of the inter-node distance at three consecutive
//! sampling instants.
//!
//! The x and y coordinates of the difference process are independent AR(1)
//! sequences sharing the lag covariance `Sigma = D tau [phi^|i-j|]`, whose
//! inverse `W` is tridiagonal. Writing the Gaussian density in polar
//! coordinates and expanding every `exp(z cos theta)` in Bessel functions
//! gives the double series
//!
//! ```text
//! f(r1, r2, r3) = r1 r2 r3 / |Sigma| exp(-(w11 r1^2 + w22 r2^2 + w33 r3^2 + beta^2 w4) / 2)
//!     * sum_{q >= 0} sum_{p in Z} eps_q (-1)^(q+p)
//!       I_q(w3 beta r3) I_q(w23 r2 r3) I_p(w1 beta r1) I_p(w12 r1 r2) I_{q+p}(w2 beta r2)
//! ```
//!
//! with `w1 = w11 + w12`, `w2 = w22 + w23 + w12`, `w3 = w33 + w23`,
//! `w4 = w1 + w2 + w3` and the Neumann factor `eps_0 = 1`, `eps_q = 2`.
//! Every term is accumulated in the signed log domain.

use std::ops::Mul;

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mobility::{ar1_coeff, OUParams};
use crate::numerics::{
    integrate, log_bessel_i_ladder, Interval, QuadratureSpec, SeriesTruncation,
    SignedLogAccumulator, SignedLogValue,
};

/// Largest AR(1) coefficient accepted before `Sigma` is treated as singular.
const PHI_LIMIT: f64 = 1.0 - 1e-9;

/// Lag covariance of `(X1, X2, X3)` (and of `(Y1, Y2, Y3)`) and its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct LagCovariance {
    /// `D tau` [m^2].
    pub scale: f64,
    pub phi: f64,
    pub sigma: [[f64; 3]; 3],
    pub w: [[f64; 3]; 3],
    /// `|w13| / max |w|` of the numerically computed inverse.
    pub w13_residual: f64,
    one_minus_phi2: f64,
}

impl LagCovariance {
    pub fn build(dt: f64, params: &OUParams) -> Result<Self> {
        let phi = ar1_coeff(dt, params.tau)?;
        let one_minus_phi2 = -(-2.0 * dt / params.tau).exp_m1();
        Self::assemble(params.diffusion() * params.tau, phi, one_minus_phi2)
    }

    /// Covariance for a given AR(1) coefficient.
    pub fn from_phi(scale: f64, phi: f64) -> Result<Self> {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::domain(format!("phi must lie in (0, 1), got {phi}")));
        }
        Self::assemble(scale, phi, (1.0 - phi) * (1.0 + phi))
    }

    fn assemble(scale: f64, phi: f64, one_minus_phi2: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!(
                "covariance scale must be > 0, got {scale}"
            )));
        }
        if phi > PHI_LIMIT {
            return Err(Error::IllConditioned { phi });
        }
        let phi2 = phi * phi;
        let unit = [[1.0, phi, phi2], [phi, 1.0, phi], [phi2, phi, 1.0]];
        let sigma = unit.map(|row| row.map(|v| scale * v));
        let m = Matrix3::from_fn(|i, j| sigma[i][j]);
        let inv = m.try_inverse().ok_or(Error::IllConditioned { phi })?;
        let w: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)]));
        let max_w = w.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let w13_residual = w[0][2].abs().max(w[2][0].abs()) / max_w;
        Ok(Self {
            scale,
            phi,
            sigma,
            w,
            w13_residual,
            one_minus_phi2,
        })
    }

    /// `ln |Sigma| = 3 ln(D tau) + 2 ln(1 - phi^2)`.
    pub fn log_det(&self) -> f64 {
        3.0 * self.scale.ln() + 2.0 * self.one_minus_phi2.ln()
    }

    /// Largest entry of `|Sigma W - I|`.
    pub fn inverse_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| self.sigma[i][k] * self.w[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

/// Everything the trivariate density needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrivariateParams {
    pub beta: f64,
    pub cov: LagCovariance,
    pub trunc: SeriesTruncation,
}

impl TrivariateParams {
    pub fn new(beta: f64, cov: LagCovariance, trunc: SeriesTruncation) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("beta must be >= 0, got {beta}")));
        }
        trunc.validate()?;
        if cov.w13_residual > 1e-12 {
            return Err(Error::domain(format!(
                "inverse covariance is not tridiagonal (residual {:.3e})",
                cov.w13_residual
            )));
        }
        Ok(Self { beta, cov, trunc })
    }

    pub fn stationary(
        dt: f64,
        params: &OUParams,
        beta: f64,
        trunc: SeriesTruncation,
    ) -> Result<Self> {
        Self::new(beta, LagCovariance::build(dt, params)?, trunc)
    }

    /// Truncation point of the radial axes.
    pub fn r_max(&self, quad: &QuadratureSpec) -> f64 {
        quad.r_max(self.beta, self.cov.scale.sqrt())
    }
}

/// Series coefficients derived from `W` and `beta`.
#[derive(Debug, Clone, Copy)]
struct Coeffs {
    w11: f64,
    w22: f64,
    w33: f64,
    w12: f64,
    w23: f64,
    /// `beta * w1`, `beta * w2`, `beta * w3`.
    c1: f64,
    c2: f64,
    c3: f64,
    /// `-ln|Sigma| - beta^2 w4 / 2`.
    log_norm: f64,
}

impl Coeffs {
    fn new(p: &TrivariateParams) -> Self {
        let w = &p.cov.w;
        let w1 = w[0][0] + w[0][1];
        let w2 = w[1][1] + w[1][2] + w[0][1];
        let w3 = w[2][2] + w[1][2];
        let w4 = w1 + w2 + w3;
        let b = p.beta;
        Self {
            w11: w[0][0],
            w22: w[1][1],
            w33: w[2][2],
            w12: w[0][1],
            w23: w[1][2],
            c1: b * w1,
            c2: b * w2,
            c3: b * w3,
            log_norm: -p.cov.log_det() - 0.5 * b * b * w4,
        }
    }
}

/// `ln I_n(z)` with its sign for a real, possibly negative argument.
#[derive(Debug, Clone)]
struct SignedLadder {
    ln_mag: Vec<f64>,
    negative: bool,
}

impl SignedLadder {
    fn new(max_order: usize, z: f64) -> Self {
        // I_n(-x) = (-1)^n I_n(x); callers guarantee finite z
        let ln_mag = log_bessel_i_ladder(max_order, z.abs()).expect("finite Bessel argument");
        Self {
            ln_mag,
            negative: z < 0.0,
        }
    }

    /// `I_n(z)` for any integer `n` (`I_{-n} = I_n`).
    #[inline]
    fn at(&self, n: i64) -> SignedLogValue {
        let k = n.unsigned_abs() as usize;
        let sign = if self.negative && k % 2 == 1 { -1 } else { 1 };
        SignedLogValue::new(sign, self.ln_mag[k])
    }
}

#[inline]
fn alternating(n: i64) -> i8 {
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

#[inline]
fn neumann(q: usize) -> f64 {
    if q == 0 {
        0.0
    } else {
        std::f64::consts::LN_2
    }
}

/// True once a term is negligible next to the running sum.
#[inline]
fn is_quiet(term: SignedLogValue, running: SignedLogValue, ln_tol: f64) -> bool {
    term.is_zero()
        || (!running.is_zero() && term.log_magnitude() < ln_tol + running.log_magnitude())
}

/// Trivariate Rician density at `(r1, r2, r3)` in signed log form.
///
/// Inner sums over `p` run `0, 1, -1, 2, -2, ...` and stop after
/// [`SeriesTruncation::QUIET_RUN`] consecutive negligible terms; the outer
/// sum over `q` uses the same rule.
pub fn trivariate_pdf_signed(
    r1: f64,
    r2: f64,
    r3: f64,
    p: &TrivariateParams,
) -> Result<SignedLogValue> {
    for r in [r1, r2, r3] {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::domain(format!(
                "distances must be finite and >= 0, got {r}"
            )));
        }
    }
    if r1 == 0.0 || r2 == 0.0 || r3 == 0.0 {
        return Ok(SignedLogValue::ZERO);
    }
    let k = Coeffs::new(p);
    let t = &p.trunc;
    let (max_p, max_q) = (t.max_p, t.max_q);
    let a12 = SignedLadder::new(max_p, k.w12 * r1 * r2);
    let b1 = SignedLadder::new(max_p, k.c1 * r1);
    let a23 = SignedLadder::new(max_q, k.w23 * r2 * r3);
    let b3 = SignedLadder::new(max_q, k.c3 * r3);
    let b2 = SignedLadder::new(max_p + max_q, k.c2 * r2);
    let ln_tol = t.term_rel_tol.ln();

    let mut outer = SignedLogAccumulator::new();
    let mut outer_quiet = 0;
    let mut converged = false;
    for q in 0..=max_q {
        let qi = q as i64;
        let head = a23
            .at(qi)
            .mul(b3.at(qi))
            .scale_log(neumann(q))
            .mul(SignedLogValue::new(alternating(qi), 0.0));
        let mut inner = SignedLogAccumulator::new();
        let mut inner_quiet = 0;
        let mut inner_done = false;
        let mut last = SignedLogValue::ZERO;
        for step in 0..=(2 * max_p) {
            let pi = if step == 0 {
                0
            } else if step % 2 == 1 {
                (step as i64 + 1) / 2
            } else {
                -(step as i64) / 2
            };
            let term = a12
                .at(pi)
                .mul(b1.at(pi))
                .mul(b2.at(pi + qi))
                .mul(SignedLogValue::new(alternating(pi), 0.0));
            inner.add(term);
            last = term;
            if is_quiet(term, inner.value(), ln_tol) {
                inner_quiet += 1;
                if inner_quiet >= SeriesTruncation::QUIET_RUN {
                    inner_done = true;
                    break;
                }
            } else {
                inner_quiet = 0;
            }
        }
        let inner_sum = inner.value();
        if !inner_done && !is_quiet(last, inner_sum, ln_tol) {
            return Err(Error::SeriesNonConvergence(format!(
                "p-sum not converged after max_p = {max_p} at q = {q} (r = {r1}, {r2}, {r3})"
            )));
        }
        let sq = head.mul(inner_sum);
        outer.add(sq);
        if is_quiet(sq, outer.value(), ln_tol) {
            outer_quiet += 1;
            if outer_quiet >= SeriesTruncation::QUIET_RUN {
                converged = true;
                break;
            }
        } else {
            outer_quiet = 0;
        }
        if q == max_q && is_quiet(sq, outer.value(), ln_tol) {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::SeriesNonConvergence(format!(
            "q-sum not converged after max_q = {max_q} (r = {r1}, {r2}, {r3})"
        )));
    }
    let prefactor = r1.ln() + r2.ln() + r3.ln() + k.log_norm
        - 0.5 * (k.w11 * r1 * r1 + k.w22 * r2 * r2 + k.w33 * r3 * r3);
    Ok(outer.value().scale_log(prefactor))
}

/// Trivariate Rician density of `(R1, R2, R3)` [1/m^3].
pub fn trivariate_pdf(r1: f64, r2: f64, r3: f64, p: &TrivariateParams) -> Result<f64> {
    Ok(trivariate_pdf_signed(r1, r2, r3, p)?.to_f64())
}

/// Joint density of `(R1, R2)` obtained by integrating `r3` over
/// `[0, r_max]`.
pub fn marginalize_r3(
    r1: f64,
    r2: f64,
    p: &TrivariateParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let iv = Interval::semi_infinite(0.0, p.r_max(quad))?;
    let first_err = std::sync::Mutex::new(None);
    let out = integrate(
        |x| match trivariate_pdf(r1, r2, x[0], p) {
            Ok(v) => v,
            Err(e) => {
                first_err.lock().unwrap().get_or_insert(e);
                0.0
            }
        },
        &[iv],
        quad,
    );
    if let Some(e) = first_err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(out?.value)
}

/// Probability mass of the boxes of a radial partition, `mass[i][j][k]` for
/// `R1` in segment `i`, `R2` in segment `j`, `R3` in segment `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxProbabilities {
    pub edges: Vec<f64>,
    mass: Vec<f64>,
    error: Vec<f64>,
    /// Bound on the mass dropped by truncating the Bessel series.
    pub series_tail: f64,
}

impl BoxProbabilities {
    pub fn segments(&self) -> usize {
        self.edges.len() - 1
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.segments();
        (i * n + j) * n + k
    }

    pub fn mass(&self, i: usize, j: usize, k: usize) -> f64 {
        self.mass[self.index(i, j, k)]
    }

    /// Difference between the fine rule and the half-node rule.
    pub fn error(&self, i: usize, j: usize, k: usize) -> f64 {
        self.error[self.index(i, j, k)]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn max_error(&self) -> f64 {
        self.error.iter().cloned().fold(0.0, f64::max)
    }
}

/// Integrates the trivariate density over every box of the partition
/// `edges` (which must start at 0 and increase strictly).
///
/// The density is a product of an `(r1, r2)` factor, an `(r2, r3)` factor
/// and an `r2` factor inside the double sum, so the `r1` and `r3` integrals
/// are taken per series order at each `r2` node and combined afterwards.
/// The result is the tensor-product Gauss-Legendre value of the full triple
/// integral at a cost quadratic, not cubic, in the node count. Panels are
/// split at every interior edge.
pub fn box_probabilities(
    p: &TrivariateParams,
    edges: &[f64],
    quad: &QuadratureSpec,
) -> Result<BoxProbabilities> {
    quad.validate()?;
    if edges.len() < 2 || edges[0] != 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain(
            "box edges must start at 0 and increase strictly",
        ));
    }
    let fine = box_masses(p, edges, quad.nodes_per_panel, quad.panels_per_dim)?;
    let coarse_spec = quad.coarsened();
    let coarse = box_masses(
        p,
        edges,
        coarse_spec.nodes_per_panel,
        coarse_spec.panels_per_dim,
    )?;
    let total: f64 = fine.0.iter().sum();
    let series_tail = fine.1;
    if series_tail > p.trunc.term_rel_tol * total {
        return Err(Error::SeriesNonConvergence(format!(
            "series tail bound {series_tail:.3e} exceeds {:.1e} of the total mass {total:.6}",
            p.trunc.term_rel_tol
        )));
    }
    let error: Vec<f64> = fine
        .0
        .iter()
        .zip(&coarse.0)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let worst = error.iter().cloned().fold(0.0, f64::max);
    let threshold = 100.0 * quad.tolerance;
    if !(worst <= threshold) {
        return Err(Error::QuadratureNonConvergence {
            estimate: worst,
            threshold,
        });
    }
    Ok(BoxProbabilities {
        edges: edges.to_vec(),
        mass: fine.0,
        error,
        series_tail,
    })
}

/// One rule: returns the box masses and a bound on the truncated tail.
fn box_masses(
    p: &TrivariateParams,
    edges: &[f64],
    nodes_per_panel: usize,
    panels: usize,
) -> Result<(Vec<f64>, f64)> {
    let k = Coeffs::new(p);
    let (max_p, max_q) = (p.trunc.max_p, p.trunc.max_q);
    let quiet = SeriesTruncation::QUIET_RUN;
    let nseg = edges.len() - 1;
    let mut iv = Interval::new(0.0, *edges.last().unwrap())?;
    for &e in &edges[1..nseg] {
        iv = iv.split_at(e);
    }
    let rule = iv.rule(nodes_per_panel, panels);
    let n = rule.len();

    // Per-node pieces that do not depend on the partner coordinate.
    let ln_r: Vec<f64> = rule.nodes.iter().map(|r| r.ln()).collect();
    let ln_w: Vec<f64> = rule.weights.iter().map(|w| w.ln()).collect();
    let b1: Vec<SignedLadder> = rule
        .nodes
        .iter()
        .map(|r| SignedLadder::new(max_p, k.c1 * r))
        .collect();
    let b3: Vec<SignedLadder> = rule
        .nodes
        .iter()
        .map(|r| SignedLadder::new(max_q, k.c3 * r))
        .collect();

    let per_node: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let r2 = rule.nodes[j];
            let mut contrib = vec![0.0; nseg * nseg * nseg];
            let seg_j = rule.segment[j];
            // alpha[c][|p|]: r1 integral over segment c of the (r1, r2) factor
            let mut alpha = vec![SignedLogAccumulator::new(); nseg * (max_p + 1)];
            let mut gamma = vec![SignedLogAccumulator::new(); nseg * (max_q + 1)];
            for i in 0..n {
                let r = rule.nodes[i];
                let seg = rule.segment[i];
                let base = ln_w[i] + ln_r[i];
                let a12 = SignedLadder::new(max_p, k.w12 * r * r2);
                let g1 = base - 0.5 * k.w11 * r * r;
                for pp in 0..=max_p {
                    let pi = pp as i64;
                    let t = a12
                        .at(pi)
                        .mul(b1[i].at(pi))
                        .mul(SignedLogValue::new(alternating(pi), 0.0))
                        .scale_log(g1);
                    alpha[seg * (max_p + 1) + pp].add(t);
                }
                let a23 = SignedLadder::new(max_q, k.w23 * r2 * r);
                let g3 = base - 0.5 * k.w33 * r * r;
                for q in 0..=max_q {
                    let qi = q as i64;
                    let t = a23
                        .at(qi)
                        .mul(b3[i].at(qi))
                        .mul(SignedLogValue::new(alternating(qi), neumann(q)))
                        .scale_log(g3);
                    gamma[seg * (max_q + 1) + q].add(t);
                }
            }
            let alpha: Vec<SignedLogValue> = alpha.iter().map(|a| a.value()).collect();
            let gamma: Vec<SignedLogValue> = gamma.iter().map(|g| g.value()).collect();
            let b2 = SignedLadder::new(max_p + max_q, k.c2 * r2);
            let node_log = ln_w[j] + ln_r[j] - 0.5 * k.w22 * r2 * r2 + k.log_norm;
            let mut tail = 0.0;
            for c in 0..nseg {
                for e in 0..nseg {
                    let mut sum = SignedLogAccumulator::new();
                    let mut tail_max = f64::NEG_INFINITY;
                    for q in 0..=max_q {
                        let g = gamma[e * (max_q + 1) + q];
                        if g.is_zero() {
                            continue;
                        }
                        for pi in -(max_p as i64)..=(max_p as i64) {
                            let a = alpha[c * (max_p + 1) + pi.unsigned_abs() as usize];
                            let t = a.mul(g).mul(b2.at(pi + q as i64));
                            if t.is_zero() {
                                continue;
                            }
                            sum.add(t);
                            if q + quiet > max_q || pi.unsigned_abs() as usize + quiet > max_p {
                                tail_max = tail_max.max(t.log_magnitude());
                            }
                        }
                    }
                    let s = sum.value();
                    contrib[(c * nseg + seg_j) * nseg + e] += s.scale_log(node_log).to_f64();
                    if tail_max > f64::NEG_INFINITY {
                        let tail_terms = (2 * max_p + 1) * (max_q + 1);
                        tail += (tail_max + node_log).exp() * tail_terms as f64;
                    }
                }
            }
            (contrib, tail)
        })
        .collect();

    let mut mass = vec![0.0; nseg * nseg * nseg];
    let mut tail = 0.0;
    for (contrib, t) in &per_node {
        for (m, c) in mass.iter_mut().zip(contrib) {
            *m += c;
        }
        tail += t;
    }
    Ok((mass, tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(phi: f64) -> TrivariateParams {
        TrivariateParams::new(
            10.0,
            LagCovariance::from_phi(1e4, phi).unwrap(),
            SeriesTruncation::default(),
        )
        .unwrap()
    }

    #[test]
    fn covariance_is_toeplitz_with_tridiagonal_inverse() {
        for phi in [0.1, 0.37, 0.9] {
            let c = LagCovariance::from_phi(1e4, phi).unwrap();
            assert!(c.w13_residual <= 1e-12, "phi={phi}: {}", c.w13_residual);
            assert!(c.inverse_residual() <= 1e-10);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(c.sigma[i][j], c.sigma[j][i]);
                }
            }
            assert_eq!(c.sigma[0][1], c.sigma[1][2]);
        }
    }

    #[test]
    fn independence_limit_covariance() {
        let p = OUParams::centered(1.0, 100.0).unwrap();
        let c = LagCovariance::build(100.0, &p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((c.sigma[i][j] - 1e4 * id).abs() < 1e-30 + 1e-12);
                assert!((c.w[i][j] - 1e-4 * id).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn near_singular_covariance_is_rejected() {
        let p = OUParams::centered(1.0, 100.0).unwrap();
        assert!(matches!(
            LagCovariance::build(1e-10, &p),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn log_det_matches_direct_determinant() {
        let c = LagCovariance::from_phi(1e4, 0.37).unwrap();
        let m = Matrix3::from_fn(|i, j| c.sigma[i][j]);
        assert!((c.log_det() - m.determinant().ln()).abs() < 1e-10);
    }

    #[test]
    fn exchange_symmetry() {
        let p = params(0.37);
        for &(a, b, c) in &[(10.0, 50.0, 90.0), (3.0, 120.0, 40.0), (200.0, 10.0, 75.0)] {
            let f = trivariate_pdf(a, b, c, &p).unwrap();
            let g = trivariate_pdf(c, b, a, &p).unwrap();
            assert!((f - g).abs() <= 1e-9 * f.abs(), "{f} vs {g}");
        }
    }

    #[test]
    fn zero_radius_gives_zero_density() {
        let p = params(0.5);
        assert_eq!(trivariate_pdf(0.0, 1.0, 1.0, &p).unwrap(), 0.0);
        assert!(trivariate_pdf(-1.0, 1.0, 1.0, &p).is_err());
    }

    #[test]
    fn tight_truncation_is_reported() {
        let mut p = params(0.9);
        p.trunc = SeriesTruncation::new(1, 1, 1e-12).unwrap();
        let r = trivariate_pdf(150.0, 150.0, 150.0, &p);
        assert!(matches!(r, Err(Error::SeriesNonConvergence(_))));
    }

    /// Density from the Gaussian law of the coordinates in polar form, with
    /// the three angles integrated by the periodic trapezoid rule.
    fn angular_oracle(r: [f64; 3], p: &TrivariateParams, n: usize) -> f64 {
        let w = &p.cov.w;
        let h = std::f64::consts::TAU / n as f64;
        let trig: Vec<(f64, f64)> = (0..n)
            .map(|i| ((i as f64 * h).cos(), (i as f64 * h).sin()))
            .collect();
        let mut acc = 0.0;
        for &(c1, s1) in &trig {
            for &(c2, s2) in &trig {
                for &(c3, s3) in &trig {
                    let x = [r[0] * c1 - p.beta, r[1] * c2 - p.beta, r[2] * c3 - p.beta];
                    let y = [r[0] * s1, r[1] * s2, r[2] * s3];
                    let mut quad = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            quad += w[i][j] * (x[i] * x[j] + y[i] * y[j]);
                        }
                    }
                    acc += (-0.5 * quad).exp();
                }
            }
        }
        let norm = (std::f64::consts::TAU).powi(3) * p.cov.log_det().exp();
        r[0] * r[1] * r[2] * acc * h * h * h / norm
    }

    #[test]
    fn series_matches_angular_integral() {
        for (beta, phi) in [(10.0, 0.37), (0.0, 0.5), (80.0, 0.9), (150.0, 0.1)] {
            let mut p = params(phi);
            p.beta = beta;
            for r in [[20.0, 60.0, 100.0], [90.0, 90.0, 90.0], [150.0, 40.0, 5.0]] {
                let f = trivariate_pdf(r[0], r[1], r[2], &p).unwrap();
                let g = angular_oracle(r, &p, 64);
                assert!(
                    (f - g).abs() <= 1e-9 * g,
                    "beta={beta} phi={phi} r={r:?}: {f} vs {g}"
                );
            }
        }
    }

    #[test]
    fn zero_offset_marginal_is_bivariate_rayleigh() {
        let phi = 0.37;
        let s2 = 1e4;
        let mut p = params(phi);
        p.beta = 0.0;
        let q = QuadratureSpec::default();
        for (r1, r2) in [(50.0, 80.0), (120.0, 30.0), (200.0, 210.0)] {
            let f = marginalize_r3(r1, r2, &p, &q).unwrap();
            let d = s2 * (1.0 - phi * phi);
            let z = phi * r1 * r2 / d;
            let i0 = crate::numerics::log_bessel_i(0, z).unwrap().exp();
            let g = r1 * r2 / (s2 * d) * (-(r1 * r1 + r2 * r2) / (2.0 * d)).exp() * i0;
            assert!((f - g).abs() <= 1e-8 * g, "{f} vs {g}");
        }
    }

    #[test]
    fn box_masses_normalize_and_match_pointwise() {
        let p = params(0.37);
        let q = QuadratureSpec::default();
        let rmax = p.r_max(&q);
        let b = box_probabilities(&p, &[0.0, 120.0, rmax], &q).unwrap();
        assert!((b.total() - 1.0).abs() < 1e-9, "total {}", b.total());
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(b.mass(i, j, k) > 0.0);
                }
            }
        }
        // Brute-force box on a coarse tensor grid of the pointwise density.
        let coarse = QuadratureSpec {
            nodes_per_panel: 20,
            panels_per_dim: 1,
            ..QuadratureSpec::default()
        };
        let lo = Interval::new(0.0, 120.0).unwrap();
        let v = integrate(
            |x| trivariate_pdf(x[0], x[1], x[2], &p).unwrap(),
            &[lo.clone(), lo.clone(), lo],
            &coarse,
        )
        .unwrap();
        assert!(
            (v.value - b.mass(0, 0, 0)).abs() < 1e-9,
            "{} vs {}",
            v.value,
            b.mass(0, 0, 0)
        );
        // Exchange symmetry of the law carries over to the boxes.
        assert!((b.mass(0, 1, 1) - b.mass(1, 1, 0)).abs() < 1e-12);
    }

    #[test]
    fn series_is_stable_for_large_arguments() {
        let mut p = params(0.9);
        p.beta = 400.0;
        let f = trivariate_pdf(400.0, 410.0, 395.0, &p).unwrap();
        assert!(f.is_finite() && f > 0.0);
        let g = angular_oracle([400.0, 410.0, 395.0], &p, 96);
        assert!((f - g).abs() <= 1e-8 * g, "{f} vs {g}");
    }

    fn paper() -> TrivariateParams {
        let p = OUParams::centered(1.0, 100.0).unwrap();
        TrivariateParams::stationary(1.0, &p, 10.0, SeriesTruncation::default()).unwrap()
    }

    #[test]
    fn positive_on_grid() {
        let p = paper();
        let h = 100.0 / 19.0;
        let mut vals = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                for k in 0..20 {
                    vals.push(
                        trivariate_pdf(i as f64 * h, j as f64 * h, k as f64 * h, &p).unwrap(),
                    );
                }
            }
        }
        let peak = vals.iter().cloned().fold(0.0, f64::max);
        assert!(vals.iter().all(|v| *v >= -1e-12 * peak));
    }

    #[test]
    fn extra_orders_change_nothing() {
        let p = paper();
        let mut wide = p.clone();
        wide.trunc = SeriesTruncation::new(80, 80, 1e-12).unwrap();
        for r in [
            [5.0, 40.0, 90.0],
            [60.0, 60.0, 60.0],
            [250.0, 180.0, 300.0],
            [20.0, 400.0, 20.0],
        ] {
            let a = trivariate_pdf(r[0], r[1], r[2], &p).unwrap();
            let b = trivariate_pdf(r[0], r[1], r[2], &wide).unwrap();
            assert!((a - b).abs() <= 1e-9 * b, "{r:?}: {a} vs {b}");
        }
    }

    #[test]
    fn factorizes_for_distant_samples() {
        let params = OUParams::centered(1.0, 100.0).unwrap();
        let p = TrivariateParams::stationary(100.0, &params, 10.0, SeriesTruncation::default())
            .unwrap();
        let law = crate::distance::RicianLaw::stationary(10.0, &params).unwrap();
        let f = |r| crate::distance::rician_pdf(r, &law).unwrap();
        for r in [[10.0, 50.0, 100.0], [150.0, 30.0, 220.0]] {
            let joint = trivariate_pdf(r[0], r[1], r[2], &p).unwrap();
            let prod = f(r[0]) * f(r[1]) * f(r[2]);
            assert!((joint - prod).abs() <= 1e-6 * prod, "{joint} vs {prod}");
        }
    }

    #[test]
    fn zero_offset_law_normalizes() {
        let mut p = paper();
        p.beta = 0.0;
        let q = QuadratureSpec::default();
        let b = box_probabilities(&p, &[0.0, p.r_max(&q)], &q).unwrap();
        assert!((b.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn double_marginal_is_stationary_rician() {
        let p = paper();
        let q = QuadratureSpec::default();
        let law = crate::distance::RicianLaw::new(p.beta, p.cov.scale).unwrap();
        let iv = Interval::semi_infinite(0.0, p.r_max(&q)).unwrap();
        for r1 in [10.0, 50.0, 100.0] {
            let m = integrate(
                |x| marginalize_r3(r1, x[0], &p, &q).unwrap(),
                std::slice::from_ref(&iv),
                &q,
            )
            .unwrap();
            let g = crate::distance::rician_pdf(r1, &law).unwrap();
            assert!((m.value - g).abs() <= 1e-4 * g, "{} vs {g}", m.value);
        }
    }

    #[test]
    fn box_edges_validated() {
        let p = params(0.37);
        let q = QuadratureSpec::default();
        assert!(box_probabilities(&p, &[1.0, 2.0], &q).is_err());
        assert!(box_probabilities(&p, &[0.0, 2.0, 2.0], &q).is_err());
    }
}
