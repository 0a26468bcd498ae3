//! First-order Marcum Q function.

use super::bessel::ladder_into;
use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};

/// Beyond this separation `|a - b|` one tail is below `exp(-800)`.
const FAR: f64 = 40.0;
/// Above this product `ab` the Neumann series becomes long and the
/// quadrature route is used instead.
const SERIES_MAX_AB: f64 = 1e4;

/// `Q_1(a, b)`: upper-tail probability of a Rician variable with
/// noncentrality `a` and unit scale, evaluated at `b`.
pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    marcum_q1_pair(a, b).map(|(q, _)| q)
}

/// Returns `(Q_1(a, b), 1 - Q_1(a, b))`, each computed so that the smaller
/// of the two keeps full relative precision.
pub fn marcum_q1_pair(a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!(
            "Marcum Q arguments must be finite and >= 0, got ({a}, {b})"
        )));
    }
    if b == 0.0 {
        return Ok((1.0, 0.0));
    }
    if a == 0.0 {
        let q = (-0.5 * b * b).exp();
        return Ok((q, -(-0.5 * b * b).exp_m1()));
    }
    // One tail is below exp(-800) here.
    if b - a > FAR {
        return Ok((0.0, 1.0));
    }
    if a - b > FAR {
        return Ok((1.0, 0.0));
    }
    let x = a * b;
    if x > SERIES_MAX_AB {
        return Ok(by_quadrature(a, b));
    }
    Ok(by_series(a, b))
}

/// Neumann series `Q = e^{-(a^2+b^2)/2} sum_{k>=0} (a/b)^k I_k(ab)` for
/// `b > a`, and the complementary series for `a > b`.
fn by_series(a: f64, b: f64) -> (f64, f64) {
    let x = a * b;
    let gap = -0.5 * (a - b) * (a - b);
    if a == b {
        // Q(a, a) = (1 + e^{-a^2} I_0(a^2)) / 2
        let mut l0 = [0.0];
        ladder_into(x, &mut l0);
        let q = 0.5 * (1.0 + (l0[0] - x).exp());
        return (q, 1.0 - q);
    }
    let terms = ((80.0 * x).sqrt().ceil() as usize + 40).max(60);
    let mut ladder = vec![0.0; terms + 1];
    ladder_into(x, &mut ladder);
    let (small, large) = if b > a { (a, b) } else { (b, a) };
    let log_rho = (small / large).ln();
    let first = if b > a { 0 } else { 1 };
    let mut sum = 0.0;
    for (k, &li) in ladder.iter().enumerate().skip(first) {
        let t = (k as f64 * log_rho + li - x + gap).exp();
        sum += t;
        if k > 2 && t < 1e-18 * sum.max(f64::MIN_POSITIVE) && k as f64 > x.sqrt() {
            break;
        }
    }
    if b > a {
        (sum, 1.0 - sum)
    } else {
        (1.0 - sum, sum)
    }
}

fn ln_rician_pdf_unit(a: f64, r: f64) -> f64 {
    let mut l0 = [0.0];
    ladder_into(a * r, &mut l0);
    r.ln() - 0.5 * (r - a) * (r - a) + (l0[0] - a * r)
}

/// Gauss-Legendre integral of the unit-scale Rician density over `[lo, hi]`.
fn integrate_pdf(a: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre(24);
    let panels = ((hi - lo) / 2.0).ceil().max(1.0) as usize;
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for j in 0..panels {
        let left = lo + j as f64 * h;
        for (t, w) in nodes.iter().zip(&weights) {
            let r = left + 0.5 * h * (t + 1.0);
            if r > 0.0 {
                total += 0.5 * h * w * ln_rician_pdf_unit(a, r).exp();
            }
        }
    }
    total
}

fn by_quadrature(a: f64, b: f64) -> (f64, f64) {
    if b >= a {
        let q = integrate_pdf(a, b, b.max(a + FAR + 5.0));
        (q, 1.0 - q)
    } else {
        let p = integrate_pdf(a, (a - FAR - 5.0).max(0.0), b);
        (1.0 - p, p)
    }
}
