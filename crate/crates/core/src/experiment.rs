//! Experiment configuration and the parameter sweeps behind the CLI.
//!
//! A config is a TOML file with `[mobility]`, `[link]`, `[sweep]`,
//! `[numerics]`, `[mc]` and `[output]` tables. Every sweep returns a
//! [`Table`] whose rows follow grid order.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkmodel::{analyze, ConnectionModel, LinkAnalysis, LinkState};
use crate::mobility::OUParams;
use crate::montecarlo::{compare, simulate_counts, LinkCounts, McConfig, McEstimate};
use crate::numerics::{QuadratureSpec, SeriesTruncation};

/// `|z|` above which a validation comparison fails.
pub const Z_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mobility: MobilityConfig,
    #[serde(default)]
    pub link: LinkConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityConfig {
    /// Relaxation time [s]; ignored when sweeping `tau`.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Square root of the diffusion coefficient [m/sqrt(s)]: one value, or
    /// one curve per value for the `delta_t` sweeps.
    #[serde(default = "default_sqrt_d")]
    pub sqrt_d: OneOrMany,
    /// Separation of the desired positions [m].
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_tau() -> f64 {
    1.0
}

fn default_sqrt_d() -> OneOrMany {
    OneOrMany::One(100.0)
}

fn default_beta() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Either `r0` [m] or the power model `(psi, gamma0, eta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            r0: Some(50.0),
            psi: None,
            gamma0: None,
            eta: None,
        }
    }
}

impl LinkConfig {
    pub fn model(&self) -> Result<ConnectionModel> {
        match (self.r0, self.psi, self.gamma0, self.eta) {
            (Some(r0), None, None, None) => ConnectionModel::new(r0),
            (None, Some(psi), Some(gamma0), Some(eta)) => {
                ConnectionModel::from_power(psi, gamma0, eta)
            }
            _ => Err(Error::Config(
                "[link] needs either r0 or all of psi, gamma0, eta".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    DeltaT,
    SqrtD,
    Tau,
}

impl SweepVariable {
    pub fn column(self) -> &'static str {
        match self {
            SweepVariable::DeltaT => "delta_t",
            SweepVariable::SqrtD => "sqrt_d",
            SweepVariable::Tau => "tau",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub grid: Grid,
    /// Sampling interval [s] when it is not the sweep variable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Spaced {
        start: f64,
        stop: f64,
        count: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::Values(v) => v.clone(),
            Grid::Spaced {
                start,
                stop,
                count,
                spacing,
            } => {
                if *count < 1 || (*count == 1 && start != stop) {
                    return Err(Error::Config(
                        "grid count must be >= 2 unless start == stop".into(),
                    ));
                }
                if *spacing == Spacing::Log && !(*start > 0.0 && *stop > 0.0) {
                    return Err(Error::Config("log grids need positive bounds".into()));
                }
                let n = *count;
                (0..n)
                    .map(|i| {
                        if i + 1 == n {
                            return *stop;
                        }
                        let t = i as f64 / (n - 1).max(1) as f64;
                        match spacing {
                            Spacing::Linear => start + t * (stop - start),
                            Spacing::Log => start * (stop / start).powf(t),
                        }
                    })
                    .collect()
            }
        };
        if v.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Config("grid values must be finite and > 0".into()));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("grid must be strictly increasing".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub max_q: usize,
    pub max_p: usize,
    pub term_rel_tol: f64,
    pub nodes_per_panel: usize,
    pub panels_per_dim: usize,
    pub tail_cutoff_sigmas: f64,
    pub tolerance: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let t = SeriesTruncation::default();
        let q = QuadratureSpec::default();
        Self {
            max_q: t.max_q,
            max_p: t.max_p,
            term_rel_tol: t.term_rel_tol,
            nodes_per_panel: q.nodes_per_panel,
            panels_per_dim: q.panels_per_dim,
            tail_cutoff_sigmas: q.tail_cutoff_sigmas,
            tolerance: q.tolerance,
        }
    }
}

impl NumericsConfig {
    pub fn truncation(&self) -> Result<SeriesTruncation> {
        SeriesTruncation::new(self.max_q, self.max_p, self.term_rel_tol)
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec> {
        let q = QuadratureSpec {
            nodes_per_panel: self.nodes_per_panel,
            panels_per_dim: self.panels_per_dim,
            tail_cutoff_sigmas: self.tail_cutoff_sigmas,
            tolerance: self.tolerance,
        };
        q.validate()?;
        Ok(q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub n_samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    pub seed: u64,
    pub stationary_start: bool,
    pub chains: usize,
}

impl Default for McSection {
    fn default() -> Self {
        let m = McConfig::default();
        Self {
            n_samples: m.n_samples,
            burn_in: m.burn_in,
            seed: m.seed,
            stationary_start: m.stationary_start,
            chains: m.chains,
        }
    }
}

impl McSection {
    pub fn config(&self) -> McConfig {
        McConfig {
            n_samples: self.n_samples,
            burn_in: self.burn_in,
            seed: self.seed,
            stationary_start: self.stationary_start,
            chains: self.chains,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Structural checks that do not need any computation.
    pub fn check(&self) -> Result<()> {
        self.sweep.grid.values()?;
        self.link.model()?;
        self.numerics.truncation()?;
        self.numerics.quadrature()?;
        if !(self.mobility.beta >= 0.0) {
            return Err(Error::Config("beta must be >= 0".into()));
        }
        let sqrt_d = self.mobility.sqrt_d.values();
        if sqrt_d.is_empty() || sqrt_d.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("sqrt_d values must be > 0".into()));
        }
        if sqrt_d.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "sqrt_d list must be strictly increasing".into(),
            ));
        }
        match self.sweep.variable {
            SweepVariable::DeltaT => {
                if self.sweep.delta_t.is_some() {
                    return Err(Error::Config(
                        "delta_t is the sweep variable; drop sweep.delta_t".into(),
                    ));
                }
            }
            SweepVariable::SqrtD | SweepVariable::Tau => {
                if sqrt_d.len() > 1 && self.sweep.variable == SweepVariable::Tau {
                    return Err(Error::Config("a tau sweep takes a single sqrt_d".into()));
                }
                match self.sweep.delta_t {
                    Some(dt) if dt > 0.0 => {}
                    _ => return Err(Error::Config("sweep.delta_t must be set and > 0".into())),
                }
            }
        }
        if let Some(mc) = &self.mc {
            mc.config().validate()?;
        }
        Ok(())
    }

    /// Parameter points in output order.
    pub fn points(&self) -> Result<Vec<Point>> {
        let grid = self.sweep.grid.values()?;
        let m = &self.mobility;
        let dt = self.sweep.delta_t.unwrap_or(f64::NAN);
        Ok(match self.sweep.variable {
            SweepVariable::DeltaT => grid
                .iter()
                .flat_map(|&dt| {
                    m.sqrt_d.values().into_iter().map(move |sqrt_d| Point {
                        tau: m.tau,
                        sqrt_d,
                        delta_t: dt,
                    })
                })
                .collect(),
            SweepVariable::SqrtD => grid
                .iter()
                .map(|&sqrt_d| Point {
                    tau: m.tau,
                    sqrt_d,
                    delta_t: dt,
                })
                .collect(),
            SweepVariable::Tau => {
                let sqrt_d = m.sqrt_d.values()[0];
                grid.iter()
                    .map(|&tau| Point {
                        tau,
                        sqrt_d,
                        delta_t: dt,
                    })
                    .collect()
            }
        })
    }

    pub fn mc_config(&self) -> McConfig {
        self.mc.clone().unwrap_or_default().config()
    }
}

/// One parameter point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub tau: f64,
    pub sqrt_d: f64,
    pub delta_t: f64,
}

impl Point {
    pub fn params(&self) -> Result<OUParams> {
        OUParams::centered(self.tau, self.sqrt_d)
    }
}

/// Formats a number with 12 significant digits, `%g` style, '.' decimal
/// separator.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV table with pre-formatted cells; empty cells mark undefined values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

fn num(v: f64) -> String {
    format_number(v)
}

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    MutualInfo,
    EntropyDt,
    EntropyD,
    EntropyTau,
}

impl SweepKind {
    pub fn variable(self) -> SweepVariable {
        match self {
            SweepKind::MutualInfo | SweepKind::EntropyDt => SweepVariable::DeltaT,
            SweepKind::EntropyD => SweepVariable::SqrtD,
            SweepKind::EntropyTau => SweepVariable::Tau,
        }
    }

    fn header(self, mc: bool) -> Vec<&'static str> {
        let mut h = match self {
            SweepKind::MutualInfo => vec!["delta_t", "sqrt_d", "r_mi"],
            SweepKind::EntropyDt => vec!["delta_t", "sqrt_d", "entropy_rate", "marginal_entropy"],
            SweepKind::EntropyD => vec!["sqrt_d", "entropy_rate"],
            SweepKind::EntropyTau => vec!["tau", "entropy_rate"],
        };
        if mc {
            match self {
                SweepKind::MutualInfo => h.extend(["r_mi_mc", "r_mi_mc_se"]),
                _ => h.extend(["entropy_rate_mc", "entropy_rate_mc_se"]),
            }
        }
        h
    }
}

/// Sweep output plus warnings about undefined cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub table: Table,
    pub warnings: Vec<String>,
}

/// Seed of sweep point `index` under the root seed.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Analytical model at every point (in parallel, returned in order).
pub fn analyze_points(cfg: &ExperimentConfig, points: &[Point]) -> Result<Vec<LinkAnalysis>> {
    let model = cfg.link.model()?;
    let trunc = cfg.numerics.truncation()?;
    let quad = cfg.numerics.quadrature()?;
    points
        .par_iter()
        .map(|p| {
            analyze(
                p.delta_t,
                &p.params()?,
                cfg.mobility.beta,
                &model,
                &trunc,
                &quad,
            )
        })
        .collect()
}

fn simulate_points(cfg: &ExperimentConfig, points: &[Point]) -> Result<Vec<LinkCounts>> {
    let model = cfg.link.model()?;
    let base = cfg.mc_config();
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mc = McConfig {
                seed: point_seed(base.seed, i),
                ..base
            };
            simulate_counts(&mc, p.delta_t, &p.params()?, cfg.mobility.beta, &model)
        })
        .collect()
}

/// Runs one of the four sweeps; `mc` adds simulation columns.
pub fn run_sweep(kind: SweepKind, cfg: &ExperimentConfig, mc: bool) -> Result<SweepOutput> {
    cfg.check()?;
    if cfg.sweep.variable != kind.variable() {
        return Err(Error::Config(format!(
            "this sweep needs sweep.variable = \"{}\"",
            kind.variable().column()
        )));
    }
    let points = cfg.points()?;
    let analyses = analyze_points(cfg, &points)?;
    let sims = if mc {
        Some(simulate_points(cfg, &points)?)
    } else {
        None
    };
    let mut table = Table::new(&kind.header(mc));
    let mut warnings = Vec::new();
    for (i, (p, a)) in points.iter().zip(&analyses).enumerate() {
        let mut row = match kind {
            SweepKind::MutualInfo => {
                let r = match a.mutual_info_ratio() {
                    Ok(r) => Some(r),
                    Err(e @ Error::UndefinedRatio { .. }) => {
                        warnings.push(format!(
                            "delta_t={} sqrt_d={}: {e}",
                            num(p.delta_t),
                            num(p.sqrt_d)
                        ));
                        None
                    }
                    Err(e) => return Err(e),
                };
                vec![num(p.delta_t), num(p.sqrt_d), opt(r)]
            }
            SweepKind::EntropyDt => vec![
                num(p.delta_t),
                num(p.sqrt_d),
                num(a.entropy_rate()),
                num(a.marginal_entropy()),
            ],
            SweepKind::EntropyD => vec![num(p.sqrt_d), num(a.entropy_rate())],
            SweepKind::EntropyTau => vec![num(p.tau), num(a.entropy_rate())],
        };
        if let Some(sims) = &sims {
            let est = match kind {
                SweepKind::MutualInfo => sims[i].mutual_info_ratio(),
                _ => sims[i].entropy_rate(),
            };
            match est {
                Ok(e) => row.extend([num(e.value), num(e.std_err)]),
                Err(e) => {
                    warnings.push(format!("point {i}: simulation estimate undefined: {e}"));
                    row.extend([String::new(), String::new()]);
                }
            }
        }
        table.rows.push(row);
    }
    Ok(SweepOutput { table, warnings })
}

/// One analytical-versus-simulation comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub quantity: &'static str,
    pub analytical: Option<f64>,
    pub empirical: Option<McEstimate>,
    pub z: Option<f64>,
}

impl Comparison {
    fn new(quantity: &'static str, analytical: Option<f64>, empirical: Option<McEstimate>) -> Self {
        let z = match (analytical, &empirical) {
            (Some(a), Some(e)) => compare(a, e).ok(),
            _ => None,
        };
        Self {
            quantity,
            analytical,
            empirical,
            z,
        }
    }

    pub fn failed(&self) -> bool {
        self.z.is_some_and(|z| z.abs() > Z_LIMIT)
    }

    pub fn status(&self) -> &'static str {
        match self.z {
            None => "undefined",
            Some(_) if self.failed() => "fail",
            Some(_) => "ok",
        }
    }
}

/// Compares the four transition entries, the steady-state probability, the
/// entropy rate and the mutual-information ratio at one point.
pub fn compare_point(a: &LinkAnalysis, counts: &LinkCounts) -> Vec<Comparison> {
    let states = [LinkState::Down, LinkState::Up];
    let emp = counts.transition();
    let names = [["p00", "p01"], ["p10", "p11"]];
    let mut out = Vec::with_capacity(7);
    for b in states {
        for x in states {
            out.push(Comparison::new(
                names[b.index()][x.index()],
                a.matrix.p(b, x).ok(),
                emp.get(b, x).ok(),
            ));
        }
    }
    out.push(Comparison::new(
        "steady_state",
        Some(a.matrix.pi()[LinkState::Up.index()]),
        Some(counts.steady_state()),
    ));
    out.push(Comparison::new(
        "entropy_rate",
        Some(a.entropy_rate()),
        counts.entropy_rate().ok(),
    ));
    out.push(Comparison::new(
        "r_mi",
        a.mutual_info_ratio().ok(),
        counts.mutual_info_ratio().ok(),
    ));
    out
}

/// Validation report and whether any comparison exceeded `|z| > 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub table: Table,
    pub failures: usize,
}

pub fn validate(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    cfg.check()?;
    let points = cfg.points()?;
    let analyses = analyze_points(cfg, &points)?;
    let sims = simulate_points(cfg, &points)?;
    let mut table = Table::new(&[
        "tau",
        "sqrt_d",
        "delta_t",
        "quantity",
        "analytical",
        "empirical",
        "std_err",
        "z",
        "status",
    ]);
    let mut failures = 0;
    for ((p, a), c) in points.iter().zip(&analyses).zip(&sims) {
        for cmp in compare_point(a, c) {
            failures += cmp.failed() as usize;
            table.rows.push(vec![
                num(p.tau),
                num(p.sqrt_d),
                num(p.delta_t),
                cmp.quantity.to_string(),
                opt(cmp.analytical),
                opt(cmp.empirical.map(|e| e.value)),
                opt(cmp.empirical.map(|e| e.std_err)),
                opt(cmp.z),
                cmp.status().to_string(),
            ]);
        }
    }
    Ok(ValidationReport { table, failures })
}
