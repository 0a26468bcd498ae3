//! Two-state Markov model of link connectivity under the hard connection
//! model: transition matrix, three-step joint pmf, mutual-information ratio
//! and entropy rate.

use crate::distance::steady_state_link_prob;
use crate::error::{Error, Result};
use crate::jointdist::{box_probabilities, TrivariateParams};
use crate::mobility::OUParams;
use crate::numerics::{QuadratureSpec, SeriesTruncation};

/// Steady-state probability below which a conditioning state is undefined.
pub const DEGENERATE_STATE_PROB: f64 = 1e-12;

/// Denominator `I(L3; L1, L2)` [bits] below which the ratio is undefined.
pub const MI_DENOMINATOR_FLOOR: f64 = 1e-20;

/// Hard connection model: the link is up iff `R <= r0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionModel {
    /// Connection range [m].
    pub r0: f64,
}

impl ConnectionModel {
    pub fn new(r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::domain(format!("r0 must be > 0, got {r0}")));
        }
        Ok(Self { r0 })
    }

    /// From the power constant, SNR threshold and path-loss exponent.
    pub fn from_power(psi: f64, gamma0: f64, eta: f64) -> Result<Self> {
        Self::new(connection_range(psi, gamma0, eta)?)
    }
}

/// `(psi / gamma0)^(1 / eta)` [m].
pub fn connection_range(psi: f64, gamma0: f64, eta: f64) -> Result<f64> {
    for (name, v) in [("psi", psi), ("gamma0", gamma0), ("eta", eta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be > 0, got {v}")));
        }
    }
    Ok((psi / gamma0).powf(1.0 / eta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkState {
    Down = 0,
    Up = 1,
}

impl LinkState {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Self::Down),
            1 => Ok(Self::Up),
            _ => Err(Error::domain(format!("link state must be 0 or 1, got {i}"))),
        }
    }
}

/// `Up` iff `r <= r0` (the boundary counts as connected).
pub fn link_indicator(r: f64, model: &ConnectionModel) -> LinkState {
    if r <= model.r0 {
        LinkState::Up
    } else {
        LinkState::Down
    }
}

/// `true` iff `dt / tau >= 1`.
pub fn markov_validity(dt: f64, tau: f64) -> bool {
    dt / tau >= 1.0
}

/// `p[b][a] = P(L2 = a | L1 = b)` with the stationary distribution.
///
/// A row is `None` when its conditioning state has stationary probability
/// below [`DEGENERATE_STATE_PROB`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    rows: [Option<[f64; 2]>; 2],
    pi: [f64; 2],
}

impl TransitionMatrix {
    /// Checks the stochastic-matrix invariants; undefined rows must belong to
    /// (near) unreachable states.
    pub fn new(rows: [Option<[f64; 2]>; 2], pi: [f64; 2]) -> Result<Self> {
        if pi.iter().any(|v| !(0.0..=1.0).contains(v)) || (pi[0] + pi[1] - 1.0).abs() > 1e-6 {
            return Err(Error::domain(format!("pi = {pi:?} is not a distribution")));
        }
        for (b, row) in rows.iter().enumerate() {
            match row {
                Some(r) => {
                    if r.iter().any(|v| !(-1e-9..=1.0 + 1e-9).contains(v))
                        || (r[0] + r[1] - 1.0).abs() > 1e-6
                    {
                        return Err(Error::domain(format!("row {b} = {r:?} is not stochastic")));
                    }
                }
                None if pi[b] >= DEGENERATE_STATE_PROB => {
                    return Err(Error::domain(format!(
                        "row {b} undefined but pi = {}",
                        pi[b]
                    )));
                }
                None => {}
            }
        }
        Ok(Self { rows, pi })
    }

    /// Matrix from complete rows, with `pi` the left eigenvector.
    pub fn from_rows(p: [[f64; 2]; 2]) -> Result<Self> {
        let pi = stationary_of(p);
        Self::new([Some(p[0]), Some(p[1])], pi)
    }

    pub fn pi(&self) -> [f64; 2] {
        self.pi
    }

    pub fn is_defined(&self, b: LinkState) -> bool {
        self.rows[b.index()].is_some()
    }

    pub fn row(&self, b: LinkState) -> Result<[f64; 2]> {
        self.rows[b.index()].ok_or(Error::DegenerateState {
            state: b.index(),
            probability: self.pi[b.index()],
        })
    }

    /// `P(L2 = a | L1 = b)`.
    pub fn p(&self, b: LinkState, a: LinkState) -> Result<f64> {
        Ok(self.row(b)?[a.index()])
    }

    /// Left eigenvector of the matrix for eigenvalue 1, if both rows exist.
    pub fn left_eigenvector(&self) -> Option<[f64; 2]> {
        Some(stationary_of([self.rows[0]?, self.rows[1]?]))
    }
}

fn stationary_of(p: [[f64; 2]; 2]) -> [f64; 2] {
    let (a, b) = (p[0][1], p[1][0]);
    if a + b == 0.0 {
        return [0.5, 0.5];
    }
    [b / (a + b), a / (a + b)]
}

/// `q[c][b][a] = P(L1 = c, L2 = b, L3 = a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPmf3 {
    q: [[[f64; 2]; 2]; 2],
}

impl JointPmf3 {
    pub fn new(q: [[[f64; 2]; 2]; 2]) -> Result<Self> {
        let flat = q.iter().flatten().flatten();
        if flat.clone().any(|v| !(v.is_finite() && *v >= -1e-12)) {
            return Err(Error::domain("pmf entries must be non-negative"));
        }
        let total: f64 = flat.sum();
        if (total - 1.0).abs() > 1e-4 {
            return Err(Error::domain(format!("pmf sums to {total}")));
        }
        Ok(Self { q })
    }

    /// Pmf of a stationary chain with transition matrix `t`.
    pub fn markov(t: &TransitionMatrix) -> Result<Self> {
        let pi = t.pi();
        let row = |b: usize| -> Result<[f64; 2]> {
            if pi[b] == 0.0 {
                Ok([0.0; 2])
            } else {
                t.row(LinkState::from_index(b)?)
            }
        };
        let p = [row(0)?, row(1)?];
        let q = std::array::from_fn(|c| {
            std::array::from_fn(|b| std::array::from_fn(|a| pi[c] * p[c][b] * p[b][a]))
        });
        Self::new(q)
    }

    pub fn get(&self, c: LinkState, b: LinkState, a: LinkState) -> f64 {
        self.q[c.index()][b.index()][a.index()]
    }

    pub fn as_array(&self) -> [[[f64; 2]; 2]; 2] {
        self.q
    }

    /// `P(L1 = c, L2 = b)`.
    pub fn pair_first(&self) -> [[f64; 2]; 2] {
        std::array::from_fn(|c| std::array::from_fn(|b| self.q[c][b][0] + self.q[c][b][1]))
    }

    /// `P(L2 = b, L3 = a)`.
    pub fn pair_last(&self) -> [[f64; 2]; 2] {
        std::array::from_fn(|b| std::array::from_fn(|a| self.q[0][b][a] + self.q[1][b][a]))
    }

    fn normalized(&self) -> [[[f64; 2]; 2]; 2] {
        let total: f64 = self.q.iter().flatten().flatten().map(|v| v.max(0.0)).sum();
        self.q.map(|m| m.map(|r| r.map(|v| v.max(0.0) / total)))
    }
}

/// `(1 + x) ln(1 + x) - x`, accurate for small `|x|`.
fn excess(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // sum_{n >= 2} (-1)^n x^n / (n (n - 1))
        let mut term = x * x;
        let mut acc = 0.0;
        for n in 2..10 {
            let nf = n as f64;
            acc += term / (nf * (nf - 1.0));
            term *= -x;
        }
        acc
    } else if x == -1.0 {
        1.0
    } else {
        (1.0 + x) * x.ln_1p() - x
    }
}

/// `sum q ln(q / m)` in bits, written as `sum m h((q - m) / m)` so that
/// nearly independent pmfs keep their relative accuracy.
fn divergence_bits(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut acc = 0.0;
    for (q, m) in pairs {
        if m > 0.0 {
            acc += m * excess((q - m) / m);
        }
    }
    acc.max(0.0) / std::f64::consts::LN_2
}

/// Information measures of a three-step link pmf [bits].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationTerms {
    /// `I(L3; L1, L2)`.
    pub past: f64,
    /// `I(L3; L2)`.
    pub last: f64,
    /// `I(L3; L1 | L2)`.
    pub conditional: f64,
}

pub fn information_terms(pmf: &JointPmf3) -> InformationTerms {
    let q = pmf.normalized();
    let q_cb: [[f64; 2]; 2] =
        std::array::from_fn(|c| std::array::from_fn(|b| q[c][b][0] + q[c][b][1]));
    let q_ba: [[f64; 2]; 2] =
        std::array::from_fn(|b| std::array::from_fn(|a| q[0][b][a] + q[1][b][a]));
    let q_b: [f64; 2] = std::array::from_fn(|b| q_ba[b][0] + q_ba[b][1]);
    let q_a: [f64; 2] = std::array::from_fn(|a| q_ba[0][a] + q_ba[1][a]);
    let cells = || (0..2).flat_map(|c| (0..2).flat_map(move |b| (0..2).map(move |a| (c, b, a))));
    let past = divergence_bits(cells().map(|(c, b, a)| (q[c][b][a], q_cb[c][b] * q_a[a])));
    let conditional = divergence_bits(cells().map(|(c, b, a)| {
        let m = if q_b[b] > 0.0 {
            q_cb[c][b] * q_ba[b][a] / q_b[b]
        } else {
            0.0
        };
        (q[c][b][a], m)
    }));
    let last = divergence_bits(
        (0..2)
            .flat_map(|b| (0..2).map(move |a| (b, a)))
            .map(|(b, a)| (q_ba[b][a], q_b[b] * q_a[a])),
    );
    InformationTerms {
        past,
        last,
        conditional,
    }
}

/// `I(L3; L1 | L2) / I(L3; L1, L2)`.
pub fn mutual_info_ratio(pmf: &JointPmf3) -> Result<f64> {
    let t = information_terms(pmf);
    if !(t.past > MI_DENOMINATOR_FLOOR) {
        return Err(Error::UndefinedRatio {
            denominator: t.past,
        });
    }
    Ok((t.conditional / t.past).clamp(0.0, 1.0))
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Binary entropy of the stationary distribution [bits].
pub fn marginal_entropy(pi: [f64; 2]) -> f64 {
    plogp(pi[0]) + plogp(pi[1])
}

/// `H(L2 | L1)` [bits/sample]; undefined rows carry no stationary weight
/// and are skipped.
pub fn entropy_rate(t: &TransitionMatrix) -> f64 {
    let pi = t.pi();
    (0..2)
        .filter_map(|b| t.rows[b].map(|row| pi[b] * (plogp(row[0]) + plogp(row[1]))))
        .sum()
}

/// All link-model quantities at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkAnalysis {
    pub pmf: JointPmf3,
    pub matrix: TransitionMatrix,
    /// Largest quadrature error estimate of any region mass, plus the
    /// truncated series and radial tail bounds.
    pub error_estimate: f64,
}

impl LinkAnalysis {
    pub fn entropy_rate(&self) -> f64 {
        entropy_rate(&self.matrix)
    }

    pub fn marginal_entropy(&self) -> f64 {
        marginal_entropy(self.matrix.pi())
    }

    pub fn mutual_info_ratio(&self) -> Result<f64> {
        mutual_info_ratio(&self.pmf)
    }
}

/// Region masses, the transition matrix and the three-step pmf at one point.
///
/// The radial axis is split at `r0`; the upper region ends at `r_max`. The
/// transition numerator integrates the trivariate law over `r3`, `r2 in I_a`
/// and `r1 in I_b`; the denominator is the stationary Rician probability of
/// `I_b`.
pub fn analyze(
    dt: f64,
    params: &OUParams,
    beta: f64,
    model: &ConnectionModel,
    trunc: &SeriesTruncation,
    quad: &QuadratureSpec,
) -> Result<LinkAnalysis> {
    let tp = TrivariateParams::stationary(dt, params, beta, *trunc)?;
    let p_up = steady_state_link_prob(beta, params, model.r0)?;
    let pi = [p_up[0], p_up[1]];
    if let Some(rare) = (0..2).find(|&s| pi[s] < DEGENERATE_STATE_PROB) {
        return Ok(frozen_analysis(pi, rare));
    }
    let r_max = tp.r_max(quad);
    let edges = if model.r0 < r_max {
        vec![0.0, model.r0, r_max]
    } else {
        vec![0.0, r_max]
    };
    let boxes = box_probabilities(&tp, &edges, quad)?;
    let nseg = boxes.segments();
    // segment 0 is the Up region, segment 1 (if any) the Down region
    let seg_of = |s: usize| {
        if s == LinkState::Up.index() {
            Some(0)
        } else if nseg == 2 {
            Some(1)
        } else {
            None
        }
    };
    let cell = |c: usize, b: usize, a: usize| match (seg_of(c), seg_of(b), seg_of(a)) {
        (Some(i), Some(j), Some(k)) => (boxes.mass(i, j, k), boxes.error(i, j, k)),
        _ => (0.0, 0.0),
    };
    let mut q = [[[0.0; 2]; 2]; 2];
    let mut err = 0.0f64;
    for c in 0..2 {
        for b in 0..2 {
            for a in 0..2 {
                let (m, e) = cell(c, b, a);
                q[c][b][a] = m;
                err = err.max(e);
            }
        }
    }
    let tail_mass = (1.0 - boxes.total()).abs();
    let pmf = JointPmf3::new(q)?;

    let mut rows = [None, None];
    for b in 0..2 {
        if pi[b] < DEGENERATE_STATE_PROB {
            continue;
        }
        let num: [f64; 2] = std::array::from_fn(|a| (0..2).map(|k| q[b][a][k]).sum::<f64>());
        rows[b] = Some(num.map(|v| (v / pi[b]).clamp(0.0, 1.0)));
    }
    let matrix = TransitionMatrix::new(rows, pi)?;
    Ok(LinkAnalysis {
        pmf,
        matrix,
        error_estimate: err + boxes.series_tail + tail_mass,
    })
}

/// When one state is (almost) never visited, every cell involving it is
/// bounded by its stationary probability, so the chain sits in the other
/// state up to that bound and no integration is needed.
fn frozen_analysis(pi: [f64; 2], rare: usize) -> LinkAnalysis {
    let common = 1 - rare;
    let mut q = [[[0.0; 2]; 2]; 2];
    q[common][common][common] = 1.0;
    let mut row = [0.0; 2];
    row[common] = 1.0;
    let mut rows = [None, None];
    rows[common] = Some(row);
    LinkAnalysis {
        pmf: JointPmf3 { q },
        matrix: TransitionMatrix { rows, pi },
        error_estimate: 3.0 * pi[rare],
    }
}

pub fn transition_matrix(
    dt: f64,
    params: &OUParams,
    beta: f64,
    model: &ConnectionModel,
    trunc: &SeriesTruncation,
    quad: &QuadratureSpec,
) -> Result<TransitionMatrix> {
    Ok(analyze(dt, params, beta, model, trunc, quad)?.matrix)
}

pub fn joint_pmf3(
    dt: f64,
    params: &OUParams,
    beta: f64,
    model: &ConnectionModel,
    trunc: &SeriesTruncation,
    quad: &QuadratureSpec,
) -> Result<JointPmf3> {
    Ok(analyze(dt, params, beta, model, trunc, quad)?.pmf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const UP: LinkState = LinkState::Up;
    const DOWN: LinkState = LinkState::Down;

    fn reference_point(dt: f64) -> Result<LinkAnalysis> {
        let p = OUParams::centered(1.0, 100.0).unwrap();
        analyze(
            dt,
            &p,
            10.0,
            &ConnectionModel::new(50.0).unwrap(),
            &SeriesTruncation::default(),
            &QuadratureSpec::default(),
        )
    }

    fn pmf_from(raw: [f64; 8]) -> JointPmf3 {
        let total: f64 = raw.iter().sum();
        let q = std::array::from_fn(|c| {
            std::array::from_fn(|b| std::array::from_fn(|a| raw[4 * c + 2 * b + a] / total))
        });
        JointPmf3::new(q).unwrap()
    }

    #[test]
    fn connection_range_examples() {
        assert_eq!(connection_range(3.0, 3.0, 2.7).unwrap(), 1.0);
        assert!((connection_range(2500.0, 1.0, 2.0).unwrap() - 50.0).abs() < 1e-12);
        assert!(connection_range(0.0, 1.0, 2.0).is_err());
        assert!(connection_range(1.0, 1.0, -2.0).is_err());
        assert_eq!(
            ConnectionModel::from_power(2500.0, 1.0, 2.0).unwrap().r0,
            50.0
        );
    }

    #[test]
    fn indicator_boundary_is_inclusive() {
        let m = ConnectionModel::new(50.0).unwrap();
        assert_eq!(link_indicator(0.0, &m), UP);
        assert_eq!(link_indicator(50.0, &m), UP);
        assert_eq!(link_indicator(50.0 + 1e-9, &m), DOWN);
    }

    #[test]
    fn validity_condition() {
        assert!(markov_validity(1.0, 1.0));
        assert!(!markov_validity(0.5, 1.0));
        assert!(markov_validity(10.0, 1.0));
    }

    #[test]
    fn entropy_examples() {
        let id = TransitionMatrix::from_rows([[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(entropy_rate(&id), 0.0);
        let fair = TransitionMatrix::from_rows([[0.5, 0.5], [0.5, 0.5]]).unwrap();
        assert!((entropy_rate(&fair) - 1.0).abs() < 1e-15);
        let pi = [0.3, 0.7];
        let iid = TransitionMatrix::from_rows([pi, pi]).unwrap();
        assert!((entropy_rate(&iid) - marginal_entropy(pi)).abs() < 1e-15);
        assert_eq!(marginal_entropy([1.0, 0.0]), 0.0);
        assert_eq!(marginal_entropy([0.5, 0.5]), 1.0);
    }

    #[test]
    fn ratio_examples() {
        let t = TransitionMatrix::from_rows([[0.8, 0.2], [0.35, 0.65]]).unwrap();
        let markov = JointPmf3::markov(&t).unwrap();
        assert!(mutual_info_ratio(&markov).unwrap() < 1e-10);
        // L3 = L1, L2 an independent fair coin
        let copy = pmf_from([1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        assert!((mutual_info_ratio(&copy).unwrap() - 1.0).abs() < 1e-12);
        let iid = pmf_from([1.0; 8]);
        assert!(matches!(
            mutual_info_ratio(&iid),
            Err(Error::UndefinedRatio { .. })
        ));
    }

    #[test]
    fn small_dependence_keeps_relative_accuracy() {
        // q = m (1 + eps s) with zero-mean s: I ~ eps^2 Var(s) / (2 ln 2)
        let eps = 1e-7;
        let s = [1.0, -1.0, -1.0, 1.0];
        let base = [0.25; 4];
        let q: Vec<f64> = base
            .iter()
            .zip(s)
            .map(|(m, s)| m * (1.0 + eps * s))
            .collect();
        let pmf = pmf_from([
            q[0] / 2.0,
            q[1] / 2.0,
            q[2] / 2.0,
            q[3] / 2.0,
            q[0] / 2.0,
            q[1] / 2.0,
            q[2] / 2.0,
            q[3] / 2.0,
        ]);
        let t = information_terms(&pmf);
        let expected = eps * eps / (2.0 * std::f64::consts::LN_2);
        assert!(
            (t.last - expected).abs() < 1e-6 * expected,
            "{} vs {expected}",
            t.last
        );
    }

    #[test]
    fn undefined_rows_report_degenerate_state() {
        let t = TransitionMatrix::new([None, Some([0.0, 1.0])], [1e-15, 1.0 - 1e-15]).unwrap();
        assert!(matches!(
            t.row(DOWN),
            Err(Error::DegenerateState { state: 0, .. })
        ));
        assert_eq!(entropy_rate(&t), 0.0);
        assert!(TransitionMatrix::new([None, Some([0.0, 1.0])], [0.1, 0.9]).is_err());
    }

    #[test]
    fn reference_point_invariants() {
        let a = reference_point(1.0).unwrap();
        let t = a.matrix;
        for b in [DOWN, UP] {
            let row = t.row(b).unwrap();
            assert!((row[0] + row[1] - 1.0).abs() < 1e-6);
        }
        let eig = t.left_eigenvector().unwrap();
        assert!((eig[1] - t.pi()[1]).abs() < 1e-4);
        let q = a.pmf.as_array();
        for c in 0..2 {
            for b in 0..2 {
                for x in 0..2 {
                    assert!((q[c][b][x] - q[x][b][c]).abs() < 1e-6);
                }
            }
        }
        let pair = a.pmf.pair_last();
        for b in 0..2 {
            for x in 0..2 {
                let implied = t.pi()[b] * t.row(LinkState::from_index(b).unwrap()).unwrap()[x];
                assert!((pair[b][x] - implied).abs() < 1e-4);
            }
        }
        assert!(a.entropy_rate() <= a.marginal_entropy());
        assert!(a.mutual_info_ratio().unwrap() < 0.02);
        assert!(a.error_estimate < 1e-10);
    }

    #[test]
    fn independence_limit() {
        let a = reference_point(100.0).unwrap();
        let pi = a.matrix.pi();
        for b in [DOWN, UP] {
            let row = a.matrix.row(b).unwrap();
            assert!((row[0] - pi[0]).abs() < 1e-4 && (row[1] - pi[1]).abs() < 1e-4);
        }
        for c in [DOWN, UP] {
            for b in [DOWN, UP] {
                for x in [DOWN, UP] {
                    let prod = pi[c.index()] * pi[b.index()] * pi[x.index()];
                    assert!((a.pmf.get(c, b, x) - prod).abs() < 1e-4);
                }
            }
        }
        assert!(matches!(
            a.mutual_info_ratio(),
            Err(Error::UndefinedRatio { .. })
        ));
    }

    #[test]
    fn pinned_nodes_freeze_the_link() {
        let p = OUParams::centered(1.0, 1e-3).unwrap();
        let a = analyze(
            1.0,
            &p,
            10.0,
            &ConnectionModel::new(50.0).unwrap(),
            &SeriesTruncation::default(),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_eq!(a.matrix.p(UP, UP).unwrap(), 1.0);
        assert!(a.matrix.row(DOWN).is_err());
        assert_eq!(a.entropy_rate(), 0.0);
        assert!(a.mutual_info_ratio().is_err());
        assert!(a.error_estimate < 1e-11);
    }

    #[test]
    fn short_interval_approaches_identity() {
        let p = OUParams::centered(1.0, 100.0).unwrap();
        let m = ConnectionModel::new(50.0).unwrap();
        let trunc = SeriesTruncation::new(200, 200, 1e-12).unwrap();
        let quad = QuadratureSpec::default();
        let mut prev = [0.0, 0.0];
        for dt in [1.0, 0.1, 0.01] {
            let t = transition_matrix(dt, &p, 10.0, &m, &trunc, &quad).unwrap();
            let diag = [t.p(DOWN, DOWN).unwrap(), t.p(UP, UP).unwrap()];
            assert!(diag[0] > prev[0] && diag[1] > prev[1], "dt={dt}: {diag:?}");
            prev = diag;
        }
        assert!(prev[0] > 0.97 && prev[1] > 0.75, "{prev:?}");
        // Beyond the reach of the default tensor rule: reported, not returned.
        let r = transition_matrix(1e-3, &p, 10.0, &m, &SeriesTruncation::default(), &quad);
        assert!(r.unwrap_err().is_numerical());
    }

    proptest! {
        #[test]
        fn chain_rule_and_data_processing(raw in proptest::array::uniform8(1e-6f64..1.0)) {
            let pmf = pmf_from(raw);
            let t = information_terms(&pmf);
            prop_assert!(t.conditional >= 0.0);
            prop_assert!(t.past + 1e-12 >= t.last);
            prop_assert!((t.past - t.last - t.conditional).abs() <= 1e-10);
            if let Ok(r) = mutual_info_ratio(&pmf) {
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn conditioning_reduces_entropy(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let t = TransitionMatrix::from_rows([[1.0 - a, a], [b, 1.0 - b]]).unwrap();
            let h = entropy_rate(&t);
            prop_assert!(h >= 0.0);
            prop_assert!(h <= marginal_entropy(t.pi()) + 1e-12);
            prop_assert!(h <= 1.0 + 1e-12);
        }

        #[test]
        fn markov_pmfs_have_zero_ratio(a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let t = TransitionMatrix::from_rows([[1.0 - a, a], [b, 1.0 - b]]).unwrap();
            let pmf = JointPmf3::markov(&t).unwrap();
            prop_assert!(information_terms(&pmf).conditional < 1e-12);
        }
    }
}
