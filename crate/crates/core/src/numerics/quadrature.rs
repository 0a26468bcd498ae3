//! Tensor-product Gauss-Legendre quadrature over boxes in one to three
//! dimensions.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Layout of the quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub nodes_per_panel: usize,
    /// Panels per segment; a segment is the part of an interval between two
    /// consecutive breakpoints.
    pub panels_per_dim: usize,
    /// Semi-infinite radial bounds are truncated at
    /// `beta + tail_cutoff_sigmas * sqrt(D tau)`.
    pub tail_cutoff_sigmas: f64,
    /// Relative tolerance used for the non-convergence check.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_panel: 48,
            panels_per_dim: 4,
            tail_cutoff_sigmas: 10.0,
            tolerance: 1e-8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 2 || self.panels_per_dim < 1 {
            return Err(Error::domain(
                "quadrature needs nodes_per_panel >= 2 and panels_per_dim >= 1",
            ));
        }
        if !(self.tail_cutoff_sigmas > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::domain(
                "tail_cutoff_sigmas and tolerance must be > 0",
            ));
        }
        Ok(())
    }

    /// Truncation point of a semi-infinite radial axis for a distance law
    /// with noncentrality `beta` and per-axis standard deviation `sd`.
    pub fn r_max(&self, beta: f64, sd: f64) -> f64 {
        beta + self.tail_cutoff_sigmas * sd
    }

    /// The companion rule used for error estimates: same panels, half the
    /// nodes.
    pub fn coarsened(&self) -> Self {
        Self {
            nodes_per_panel: (self.nodes_per_panel / 2).max(2),
            ..*self
        }
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(z) and its derivative
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// A closed integration interval, optionally split at interior breakpoints
/// so that panel boundaries fall on known kinks of the integrand.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
    breaks: Vec<f64>,
    truncated: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::domain(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Self {
            lo,
            hi,
            breaks: Vec::new(),
            truncated: false,
        })
    }

    /// `[lo, +inf)` truncated at `r_max`.
    pub fn semi_infinite(lo: f64, r_max: f64) -> Result<Self> {
        let mut iv = Self::new(lo, r_max)?;
        iv.truncated = true;
        Ok(iv)
    }

    /// Adds an interior breakpoint; points outside `(lo, hi)` are ignored.
    pub fn split_at(mut self, x: f64) -> Self {
        if x > self.lo && x < self.hi && !self.breaks.contains(&x) {
            self.breaks.push(x);
            self.breaks.sort_by(f64::total_cmp);
        }
        self
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Segment edges including both ends.
    pub fn edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.breaks.len() + 2);
        e.push(self.lo);
        e.extend_from_slice(&self.breaks);
        e.push(self.hi);
        e
    }

    /// Composite rule with `panels` equal panels per segment.
    pub fn rule(&self, nodes_per_panel: usize, panels: usize) -> PanelRule {
        let (t, w) = gauss_legendre(nodes_per_panel);
        let edges = self.edges();
        let mut rule = PanelRule::default();
        for (seg, pair) in edges.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let h = (b - a) / panels as f64;
            for j in 0..panels {
                let left = a + j as f64 * h;
                for (ti, wi) in t.iter().zip(&w) {
                    rule.nodes.push(left + 0.5 * h * (ti + 1.0));
                    rule.weights.push(0.5 * h * wi);
                    rule.segment.push(seg);
                }
            }
        }
        rule
    }
}

/// Flattened composite rule: node positions, weights and the segment each
/// node belongs to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub segment: Vec<usize>,
}

impl PanelRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Result of a quadrature: value and a two-level error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

/// Integrates `f` over the box `bounds` (one to three dimensions).
///
/// The error estimate is the difference between the rule described by
/// `spec` and the same panels with half the nodes. A difference larger than
/// `100 * spec.tolerance` (relative, with a round-off floor) is reported as
/// non-convergence.
pub fn integrate<F>(f: F, bounds: &[Interval], spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    if bounds.is_empty() || bounds.len() > 3 {
        return Err(Error::domain(format!(
            "integrate supports 1 to 3 dimensions, got {}",
            bounds.len()
        )));
    }
    let (fine, fine_abs) = tensor_sum(&f, bounds, spec.nodes_per_panel, spec.panels_per_dim);
    let coarse = spec.coarsened();
    let (rough, _) = tensor_sum(&f, bounds, coarse.nodes_per_panel, coarse.panels_per_dim);
    let error_estimate = (fine - rough).abs();
    let threshold = 100.0 * spec.tolerance * fine.abs() + 64.0 * f64::EPSILON * fine_abs;
    if !fine.is_finite() || error_estimate > threshold {
        return Err(Error::QuadratureNonConvergence {
            estimate: error_estimate,
            threshold,
        });
    }
    Ok(Integral {
        value: fine,
        error_estimate,
    })
}

/// Returns `(sum w f, sum w |f|)`. The outermost axis is spread over the
/// thread pool; partial sums are combined in node order so the result does
/// not depend on scheduling.
fn tensor_sum<F>(f: &F, bounds: &[Interval], n: usize, panels: usize) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let rules: Vec<PanelRule> = bounds.iter().map(|b| b.rule(n, panels)).collect();
    let outer = &rules[0];
    let partial: Vec<(f64, f64)> = (0..outer.len())
        .into_par_iter()
        .map(|i| {
            let mut point = [0.0; 3];
            point[0] = outer.nodes[i];
            let w0 = outer.weights[i];
            let d = rules.len();
            let mut s = 0.0;
            let mut sa = 0.0;
            match d {
                1 => {
                    let v = f(&point[..1]);
                    s = v;
                    sa = v.abs();
                }
                2 => {
                    for (x1, w1) in rules[1].nodes.iter().zip(&rules[1].weights) {
                        point[1] = *x1;
                        let v = w1 * f(&point[..2]);
                        s += v;
                        sa += v.abs();
                    }
                }
                _ => {
                    for (x1, w1) in rules[1].nodes.iter().zip(&rules[1].weights) {
                        point[1] = *x1;
                        for (x2, w2) in rules[2].nodes.iter().zip(&rules[2].weights) {
                            point[2] = *x2;
                            let v = w1 * w2 * f(&point[..3]);
                            s += v;
                            sa += v.abs();
                        }
                    }
                }
            }
            (w0 * s, w0 * sa)
        })
        .collect();
    partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, sa)| (a + s, b + sa))
}
