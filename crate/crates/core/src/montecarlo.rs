//! Simulation oracle for the link model.
//!
//! Chains of the two-node OU process are simulated with the exact stepper
//! and thresholded with the link indicator; nothing else from the
//! analytical side is used. Chain `c` draws axis `a` (x1, y1, x2, y2) from a
//! ChaCha8 stream `4 c + a` of the root seed, so results do not depend on
//! thread count or scheduling.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linkmodel::{link_indicator, ConnectionModel, LinkState};
use crate::mobility::{sample_stationary, Axis, OUParams, PairConfig, Stepper};

/// Conditioning states seen fewer times than this have no estimate.
pub const MIN_STATE_COUNT: u64 = 100;

const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Number of simulated transitions over all chains.
    pub n_samples: u64,
    /// Discarded steps per chain; `None` picks 0 for a stationary start and
    /// `100 tau / dt` otherwise.
    pub burn_in: Option<u64>,
    pub seed: u64,
    pub stationary_start: bool,
    pub chains: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            burn_in: None,
            seed: 0,
            stationary_start: true,
            chains: 1024,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10_000 {
            return Err(Error::domain(format!(
                "n_samples must be >= 1e4, got {}",
                self.n_samples
            )));
        }
        if self.chains < 2 {
            return Err(Error::domain(
                "at least two chains are needed for standard errors",
            ));
        }
        Ok(())
    }

    fn steps_per_chain(&self) -> u64 {
        self.n_samples.div_ceil(self.chains as u64).max(2)
    }

    fn burn_in_steps(&self, dt: f64, tau: f64) -> u64 {
        match self.burn_in {
            Some(b) => b,
            None if self.stationary_start => 0,
            None => (100.0 * tau / dt).ceil() as u64,
        }
    }
}

/// Point estimate with its standard error and sample count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n: u64,
}

/// `(analytical - value) / std_err`.
pub fn compare(analytical: f64, empirical: &McEstimate) -> Result<f64> {
    if !(empirical.std_err > 0.0) {
        return Err(Error::DegenerateEstimate);
    }
    Ok((analytical - empirical.value) / empirical.std_err)
}

/// Link-state counts of one chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChainCounts {
    pub states: [u64; 2],
    /// `transitions[b][a]`: `b` followed by `a`.
    pub transitions: [[u64; 2]; 2],
    /// `triples[c][b][a]` over overlapping consecutive triples.
    pub triples: [[[u64; 2]; 2]; 2],
}

impl ChainCounts {
    fn absorb(&mut self, other: &ChainCounts) {
        for s in 0..2 {
            self.states[s] += other.states[s];
            for a in 0..2 {
                self.transitions[s][a] += other.transitions[s][a];
                for c in 0..2 {
                    self.triples[c][s][a] += other.triples[c][s][a];
                }
            }
        }
    }

    fn n_transitions(&self) -> u64 {
        self.transitions.iter().flatten().sum()
    }

    fn n_triples(&self) -> u64 {
        self.triples.iter().flatten().flatten().sum()
    }
}

/// Counts of every chain, in chain order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCounts {
    pub chains: Vec<ChainCounts>,
    pub pooled: ChainCounts,
    seed: u64,
}

fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates all chains and tallies link states.
pub fn simulate_counts(
    config: &McConfig,
    dt: f64,
    params: &OUParams,
    beta: f64,
    model: &ConnectionModel,
) -> Result<LinkCounts> {
    config.validate()?;
    let pair = PairConfig::from_params(params, beta)?;
    let axes = [Axis::X, Axis::Y];
    let mut steppers = Vec::with_capacity(4);
    for node in &pair.nodes {
        for axis in axes {
            steppers.push((Stepper::new(node, dt, axis)?, *node, axis));
        }
    }
    let burn = config.burn_in_steps(dt, params.tau);
    let steps = config.steps_per_chain();
    let chains: Vec<ChainCounts> = (0..config.chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut rngs: Vec<ChaCha8Rng> =
                (0..4).map(|a| chain_rng(config.seed, 4 * c + a)).collect();
            let mut pos = [0.0f64; 4];
            for (k, (_, node, axis)) in steppers.iter().enumerate() {
                pos[k] = if config.stationary_start {
                    sample_stationary(node, &mut rngs[k], *axis)
                } else {
                    node.mu(*axis)
                };
            }
            let mut advance = |pos: &mut [f64; 4]| {
                for (k, (st, _, _)) in steppers.iter().enumerate() {
                    let z: f64 = rngs[k].sample(StandardNormal);
                    pos[k] = st.advance(pos[k], z);
                }
            };
            for _ in 0..burn {
                advance(&mut pos);
            }
            let state =
                |p: &[f64; 4]| link_indicator((p[2] - p[0]).hypot(p[3] - p[1]), model).index();
            let mut counts = ChainCounts::default();
            let mut prev2: Option<usize> = None;
            let mut prev = state(&pos);
            counts.states[prev] += 1;
            for _ in 0..steps {
                advance(&mut pos);
                let s = state(&pos);
                counts.states[s] += 1;
                counts.transitions[prev][s] += 1;
                if let Some(p2) = prev2 {
                    counts.triples[p2][prev][s] += 1;
                }
                prev2 = Some(prev);
                prev = s;
            }
            counts
        })
        .collect();
    let mut pooled = ChainCounts::default();
    for c in &chains {
        pooled.absorb(c);
    }
    Ok(LinkCounts {
        chains,
        pooled,
        seed: config.seed,
    })
}

/// Row-conditional transition frequencies with binomial standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalTransition {
    pub counts: [[u64; 2]; 2],
    rows: [Option<[McEstimate; 2]>; 2],
}

impl EmpiricalTransition {
    fn from_counts(counts: [[u64; 2]; 2]) -> Self {
        let rows = std::array::from_fn(|b| {
            let n = counts[b][0] + counts[b][1];
            (n >= MIN_STATE_COUNT).then(|| {
                std::array::from_fn(|a| {
                    let p = counts[b][a] as f64 / n as f64;
                    McEstimate {
                        value: p,
                        std_err: (p * (1.0 - p) / n as f64).sqrt(),
                        n,
                    }
                })
            })
        });
        Self { counts, rows }
    }

    /// Estimate of `P(L2 = a | L1 = b)`.
    pub fn get(&self, b: LinkState, a: LinkState) -> Result<McEstimate> {
        self.rows[b.index()]
            .map(|r| r[a.index()])
            .ok_or(Error::InsufficientCount {
                state: b.index(),
                count: self.counts[b.index()][0] + self.counts[b.index()][1],
                required: MIN_STATE_COUNT,
            })
    }

    /// Raw counts as CSV `state_prev,state_next,count`.
    pub fn write_counts_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "state_prev,state_next,count")?;
        for b in 0..2 {
            for a in 0..2 {
                writeln!(w, "{b},{a},{}", self.counts[b][a])?;
            }
        }
        Ok(())
    }
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn bootstrap_sd(samples: &[f64]) -> f64 {
    mean_and_se(samples).1 * (samples.len() as f64).sqrt()
}

fn entropy_nats<'a>(counts: impl Iterator<Item = &'a u64> + Clone) -> (f64, usize) {
    let n: u64 = counts.clone().sum();
    let mut h = 0.0;
    let mut support = 0;
    for &k in counts {
        if k > 0 {
            let p = k as f64 / n as f64;
            h -= p * p.ln();
            support += 1;
        }
    }
    (h, support)
}

/// Miller-Madow corrected entropy [nats].
fn corrected_entropy<'a>(counts: impl Iterator<Item = &'a u64> + Clone) -> f64 {
    let n: u64 = counts.clone().sum();
    let (h, m) = entropy_nats(counts);
    h + (m.saturating_sub(1)) as f64 / (2.0 * n as f64)
}

/// Plug-in `H(L2 | L1)` [bits]; unobserved states carry no weight.
fn plugin_entropy_rate(c: &ChainCounts) -> Result<f64> {
    let total = c.n_transitions() as f64;
    let mut h = 0.0;
    for b in 0..2 {
        let n = c.transitions[b][0] + c.transitions[b][1];
        if n == 0 {
            continue;
        }
        if n < MIN_STATE_COUNT {
            return Err(Error::InsufficientCount {
                state: b,
                count: n,
                required: MIN_STATE_COUNT,
            });
        }
        let (hb, _) = entropy_nats(c.transitions[b].iter());
        h += n as f64 / total * hb;
    }
    Ok(h / std::f64::consts::LN_2)
}

/// Bias-corrected `(I(L3; L1 | L2), I(L3; L1, L2))` [bits].
fn corrected_information(c: &ChainCounts) -> (f64, f64) {
    let t = &c.triples;
    let pair_cb: Vec<u64> = (0..2)
        .flat_map(|x| (0..2).map(move |y| t[x][y][0] + t[x][y][1]))
        .collect();
    let pair_ba: Vec<u64> = (0..2)
        .flat_map(|y| (0..2).map(move |z| t[0][y][z] + t[1][y][z]))
        .collect();
    let single_b: Vec<u64> = (0..2)
        .map(|y| pair_ba[2 * y] + pair_ba[2 * y + 1])
        .collect();
    let single_a: Vec<u64> = (0..2).map(|z| pair_ba[z] + pair_ba[2 + z]).collect();
    let h3 = corrected_entropy(t.iter().flatten().flatten());
    let h_cb = corrected_entropy(pair_cb.iter());
    let h_ba = corrected_entropy(pair_ba.iter());
    let h_b = corrected_entropy(single_b.iter());
    let h_a = corrected_entropy(single_a.iter());
    let ln2 = std::f64::consts::LN_2;
    let conditional = (h_cb + h_ba - h_b - h3) / ln2;
    let past = (h_a + h_cb - h3) / ln2;
    (conditional, past)
}

impl LinkCounts {
    fn bootstrap<F: Fn(&ChainCounts) -> Option<f64>>(&self, stat: F) -> (Vec<f64>, usize) {
        let mut rng = chain_rng(self.seed, u64::MAX);
        let n = self.chains.len();
        let mut out = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        let mut failed = 0;
        for _ in 0..BOOTSTRAP_RESAMPLES {
            let mut agg = ChainCounts::default();
            for _ in 0..n {
                agg.absorb(&self.chains[rng.random_range(0..n)]);
            }
            match stat(&agg) {
                Some(v) => out.push(v),
                None => failed += 1,
            }
        }
        (out, failed)
    }

    pub fn transition(&self) -> EmpiricalTransition {
        EmpiricalTransition::from_counts(self.pooled.transitions)
    }

    /// Per-cell triple frequencies; standard errors from the spread of the
    /// per-chain frequencies.
    pub fn joint3(&self) -> [[[McEstimate; 2]; 2]; 2] {
        let n = self.pooled.n_triples();
        std::array::from_fn(|c| {
            std::array::from_fn(|b| {
                std::array::from_fn(|a| {
                    let per_chain: Vec<f64> = self
                        .chains
                        .iter()
                        .map(|ch| ch.triples[c][b][a] as f64 / ch.n_triples().max(1) as f64)
                        .collect();
                    McEstimate {
                        value: self.pooled.triples[c][b][a] as f64 / n as f64,
                        std_err: mean_and_se(&per_chain).1,
                        n,
                    }
                })
            })
        })
    }

    /// Fraction of sampled instants with the link up.
    pub fn steady_state(&self) -> McEstimate {
        let total: u64 = self.pooled.states.iter().sum();
        let per_chain: Vec<f64> = self
            .chains
            .iter()
            .map(|ch| ch.states[1] as f64 / (ch.states[0] + ch.states[1]) as f64)
            .collect();
        McEstimate {
            value: self.pooled.states[1] as f64 / total as f64,
            std_err: mean_and_se(&per_chain).1,
            n: total,
        }
    }

    /// Plug-in entropy rate with a bootstrap-over-chains standard error.
    pub fn entropy_rate(&self) -> Result<McEstimate> {
        let value = plugin_entropy_rate(&self.pooled)?;
        let (samples, _) = self.bootstrap(|c| plugin_entropy_rate(c).ok());
        Ok(McEstimate {
            value,
            std_err: bootstrap_sd(&samples),
            n: self.pooled.n_transitions(),
        })
    }

    /// Ratio of bias-corrected information estimates with a bootstrap
    /// standard error.
    pub fn mutual_info_ratio(&self) -> Result<McEstimate> {
        let ratio = |c: &ChainCounts| {
            let (cond, past) = corrected_information(c);
            (past > 0.0).then(|| cond / past)
        };
        let (_, past) = corrected_information(&self.pooled);
        let value = ratio(&self.pooled).ok_or(Error::UndefinedRatio { denominator: past })?;
        let (samples, failed) = self.bootstrap(ratio);
        if failed * 10 > BOOTSTRAP_RESAMPLES {
            return Err(Error::UndefinedRatio { denominator: past });
        }
        Ok(McEstimate {
            value,
            std_err: bootstrap_sd(&samples),
            n: self.pooled.n_triples(),
        })
    }
}

pub fn empirical_transition(
    config: &McConfig,
    dt: f64,
    params: &OUParams,
    beta: f64,
    model: &ConnectionModel,
) -> Result<EmpiricalTransition> {
    Ok(simulate_counts(config, dt, params, beta, model)?.transition())
}

pub fn empirical_joint3(
    config: &McConfig,
    dt: f64,
    params: &OUParams,
    beta: f64,
    model: &ConnectionModel,
) -> Result<[[[McEstimate; 2]; 2]; 2]> {
    Ok(simulate_counts(config, dt, params, beta, model)?.joint3())
}

pub fn empirical_entropy_rate(
    config: &McConfig,
    dt: f64,
    params: &OUParams,
    beta: f64,
    model: &ConnectionModel,
) -> Result<McEstimate> {
    simulate_counts(config, dt, params, beta, model)?.entropy_rate()
}

pub fn empirical_steady_state(
    config: &McConfig,
    dt: f64,
    params: &OUParams,
    beta: f64,
    model: &ConnectionModel,
) -> Result<McEstimate> {
    Ok(simulate_counts(config, dt, params, beta, model)?.steady_state())
}

pub fn empirical_mutual_info_ratio(
    config: &McConfig,
    dt: f64,
    params: &OUParams,
    beta: f64,
    model: &ConnectionModel,
) -> Result<McEstimate> {
    simulate_counts(config, dt, params, beta, model)?.mutual_info_ratio()
}

#[cfg(test)]
mod tests {
    use super::*;

    const UP: LinkState = LinkState::Up;
    const DOWN: LinkState = LinkState::Down;

    fn small(seed: u64) -> McConfig {
        McConfig {
            n_samples: 100_000,
            seed,
            chains: 64,
            ..McConfig::default()
        }
    }

    fn model() -> ConnectionModel {
        ConnectionModel::new(50.0).unwrap()
    }

    #[test]
    fn compare_examples() {
        let e = McEstimate {
            value: 0.3,
            std_err: 0.01,
            n: 10,
        };
        assert_eq!(compare(0.3, &e).unwrap(), 0.0);
        assert!((compare(0.31, &e).unwrap() - 1.0).abs() < 1e-12);
        let flat = McEstimate { std_err: 0.0, ..e };
        assert!(matches!(
            compare(0.3, &flat),
            Err(Error::DegenerateEstimate)
        ));
    }

    #[test]
    fn frozen_link_stays_up() {
        let p = OUParams::centered(1.0, 1e-6).unwrap();
        let counts = simulate_counts(&small(1), 1.0, &p, 10.0, &model()).unwrap();
        let t = counts.transition();
        let stay = t.get(UP, UP).unwrap();
        assert_eq!(stay.value, 1.0);
        assert_eq!(stay.std_err, 0.0);
        assert!(matches!(
            t.get(DOWN, UP),
            Err(Error::InsufficientCount { state: 0, .. })
        ));
        let h = counts.entropy_rate().unwrap();
        assert_eq!(h.value, 0.0);
        assert_eq!(h.std_err, 0.0);
    }

    #[test]
    fn frequencies_sum_to_one() {
        let p = OUParams::centered(1.0, 100.0).unwrap();
        let j = empirical_joint3(&small(2), 1.0, &p, 10.0, &model()).unwrap();
        let total: f64 = j.iter().flatten().flatten().map(|e| e.value).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for c in 0..2 {
            for a in 0..2 {
                let (x, y) = (j[c][0][a], j[a][0][c]);
                let se = x.std_err.hypot(y.std_err);
                assert!((x.value - y.value).abs() <= 3.0 * se + 1e-15);
            }
        }
    }

    #[test]
    fn reproducible_bit_for_bit() {
        let p = OUParams::centered(1.0, 100.0).unwrap();
        let a = simulate_counts(&small(9), 0.5, &p, 10.0, &model()).unwrap();
        let b = simulate_counts(&small(9), 0.5, &p, 10.0, &model()).unwrap();
        assert_eq!(a, b);
        let c = simulate_counts(&small(10), 0.5, &p, 10.0, &model()).unwrap();
        assert_ne!(a.pooled, c.pooled);
        assert_eq!(a.entropy_rate().unwrap(), b.entropy_rate().unwrap());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let p = OUParams::centered(1.0, 100.0).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let single = pool.install(|| simulate_counts(&small(4), 1.0, &p, 10.0, &model()).unwrap());
        let many = simulate_counts(&small(4), 1.0, &p, 10.0, &model()).unwrap();
        assert_eq!(single, many);
    }

    #[test]
    fn independent_samples_match_stationary_row() {
        let p = OUParams::centered(1.0, 100.0).unwrap();
        let counts = simulate_counts(&small(5), 100.0, &p, 10.0, &model()).unwrap();
        let pi = counts.steady_state();
        let t = counts.transition();
        for b in [DOWN, UP] {
            let e = t.get(b, UP).unwrap();
            assert!((e.value - pi.value).abs() <= 3.0 * e.std_err.hypot(pi.std_err));
        }
    }

    #[test]
    fn counts_csv_layout() {
        let t = EmpiricalTransition::from_counts([[5, 1], [2, 7]]);
        let mut buf = Vec::new();
        t.write_counts_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "state_prev,state_next,count\n0,0,5\n0,1,1\n1,0,2\n1,1,7\n"
        );
    }

    #[test]
    fn config_validation_and_burn_in() {
        assert!(McConfig {
            n_samples: 10,
            ..McConfig::default()
        }
        .validate()
        .is_err());
        let moving = McConfig {
            stationary_start: false,
            ..McConfig::default()
        };
        assert_eq!(moving.burn_in_steps(0.5, 1.0), 200);
        assert_eq!(McConfig::default().burn_in_steps(0.5, 1.0), 0);
    }
}
