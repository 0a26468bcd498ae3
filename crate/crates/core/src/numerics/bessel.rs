//! Modified Bessel functions of the first kind, integer order, evaluated in
//! the log domain.
//!
//! Internally everything is expressed through the exponentially scaled
//! function `I_n(x) e^{-x}`: a power series for small arguments, the
//! large-argument (Hankel) expansion where it converges to machine
//! precision, and the backward ratio recurrence `I_k / I_{k-1}` otherwise.

use crate::error::{Error, Result};

/// Below this argument the power series is used.
const SERIES_LIMIT: f64 = 15.0;

/// Natural log of `I_order(x)`.
///
/// Returns `-inf` for `I_n(0)` with `n >= 1`. Arguments up to at least `1e8`
/// are handled without overflow.
pub fn log_bessel_i(order: u32, x: f64) -> Result<f64> {
    check_arg(x)?;
    let n = order as usize;
    if x == 0.0 {
        return Ok(if n == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if x < SERIES_LIMIT {
        return Ok(ln_series(n, x));
    }
    if hankel_converges(n, x) {
        return Ok(ln_hankel(n, x));
    }
    let mut ladder = vec![0.0; n + 1];
    ladder_into(x, &mut ladder);
    Ok(ladder[n])
}

/// `ln I_n(x)` for `n = 0..=max_order`.
pub fn log_bessel_i_ladder(max_order: usize, x: f64) -> Result<Vec<f64>> {
    check_arg(x)?;
    let mut out = vec![0.0; max_order + 1];
    ladder_into(x, &mut out);
    Ok(out)
}

fn check_arg(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!(
            "Bessel argument must be >= 0, got {x}"
        )));
    }
    if x.is_infinite() {
        return Err(Error::domain("Bessel argument must be finite"));
    }
    Ok(())
}

/// Fills `out[n] = ln I_n(x)` for every slot. `x` must be finite and >= 0.
pub(crate) fn ladder_into(x: f64, out: &mut [f64]) {
    let Some(top) = out.len().checked_sub(1) else {
        return;
    };
    if x == 0.0 {
        out.fill(f64::NEG_INFINITY);
        out[0] = 0.0;
        return;
    }
    if hankel_converges(top, x) {
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = ln_hankel(n, x);
        }
        return;
    }
    out[0] = if x < SERIES_LIMIT {
        ln_series(0, x)
    } else {
        ln_hankel(0, x)
    };
    if top == 0 {
        return;
    }
    // Backward recurrence for r_k = I_k / I_{k-1}; errors in the starting
    // value are damped by r_k^2 per step.
    let start = top + 30 + (50.0 * x).sqrt().ceil() as usize;
    let mut r = 0.0;
    let mut ratios = vec![0.0; top + 1];
    for k in (1..=start).rev() {
        r = x / (2.0 * k as f64 + x * r);
        if k <= top {
            ratios[k] = r;
        }
    }
    for k in 1..=top {
        out[k] = out[k - 1] + ratios[k].ln();
    }
}

fn hankel_converges(n: usize, x: f64) -> bool {
    x >= SERIES_LIMIT && x >= (n * n) as f64
}

/// `ln I_n(x)` by the ascending series; all terms are positive.
fn ln_series(n: usize, x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= y / (k * (k + n as f64));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    n as f64 * (0.5 * x).ln() - ln_factorial(n) + sum.ln()
}

/// `ln I_n(x)` from the large-argument expansion of `I_n(x) e^{-x}`.
fn ln_hankel(n: usize, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut k = 1.0f64;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * k * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln()
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    if n < 256 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        let m = n as f64 + 1.0;
        // Stirling series for ln Gamma(m).
        (m - 0.5) * m.ln() - m + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * m)
            - 1.0 / (360.0 * m.powi(3))
            + 1.0 / (1260.0 * m.powi(5))
    }
}
