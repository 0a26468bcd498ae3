//! Python bindings: OU parameters, the analytical link model, the Rician
//! distance law and the simulation oracle.

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use linkstab::distance::{rician_cdf as cdf, rician_pdf as pdf, RicianLaw};
use linkstab::jointdist::TrivariateParams;
use linkstab::linkmodel::{self, ConnectionModel, LinkState};
use linkstab::mobility::{self, PairConfig};
use linkstab::montecarlo::{self, McConfig};
use linkstab::numerics::{self, QuadratureSpec, SeriesTruncation};
use linkstab::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn state(i: usize) -> PyResult<LinkState> {
    LinkState::from_index(i).map_err(to_py)
}

/// OU mobility parameters of one node.
#[pyclass(name = "OUParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyOUParams {
    inner: mobility::OUParams,
}

#[pymethods]
impl PyOUParams {
    #[new]
    #[pyo3(signature = (tau, sqrt_d, mu_x=0.0, mu_y=0.0))]
    fn new(tau: f64, sqrt_d: f64, mu_x: f64, mu_y: f64) -> PyResult<Self> {
        Ok(Self {
            inner: mobility::OUParams::new(tau, sqrt_d, mu_x, mu_y).map_err(to_py)?,
        })
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[getter]
    fn sqrt_d(&self) -> f64 {
        self.inner.sqrt_d
    }

    #[getter]
    fn stationary_variance(&self) -> f64 {
        self.inner.stationary_variance()
    }

    fn __repr__(&self) -> String {
        format!(
            "OUParams(tau={}, sqrt_d={}, mu_x={}, mu_y={})",
            self.inner.tau, self.inner.sqrt_d, self.inner.mu_x, self.inner.mu_y
        )
    }
}

/// Two-state link transition matrix with its stationary distribution.
#[pyclass(name = "TransitionMatrix", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyTransitionMatrix {
    inner: linkmodel::TransitionMatrix,
}

#[pymethods]
impl PyTransitionMatrix {
    /// `P(L2 = a | L1 = b)`.
    fn p(&self, b: usize, a: usize) -> PyResult<f64> {
        self.inner.p(state(b)?, state(a)?).map_err(to_py)
    }

    #[getter]
    fn pi(&self) -> (f64, f64) {
        let pi = self.inner.pi();
        (pi[0], pi[1])
    }

    fn entropy_rate(&self) -> f64 {
        linkmodel::entropy_rate(&self.inner)
    }
}

/// All link-model quantities at one parameter point.
#[pyclass(name = "LinkAnalysis", frozen)]
struct PyLinkAnalysis {
    inner: linkmodel::LinkAnalysis,
}

#[pymethods]
impl PyLinkAnalysis {
    #[getter]
    fn matrix(&self) -> PyTransitionMatrix {
        PyTransitionMatrix {
            inner: self.inner.matrix,
        }
    }

    /// `q[c][b][a] = P(L1 = c, L2 = b, L3 = a)` as nested lists.
    #[getter]
    fn pmf(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner
            .pmf
            .as_array()
            .iter()
            .map(|m| m.iter().map(|r| r.to_vec()).collect())
            .collect()
    }

    #[getter]
    fn error_estimate(&self) -> f64 {
        self.inner.error_estimate
    }

    fn entropy_rate(&self) -> f64 {
        self.inner.entropy_rate()
    }

    fn marginal_entropy(&self) -> f64 {
        self.inner.marginal_entropy()
    }

    fn mutual_info_ratio(&self) -> PyResult<f64> {
        self.inner.mutual_info_ratio().map_err(to_py)
    }
}

/// Simulation estimate with standard error and sample count.
#[pyclass(name = "McEstimate", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyMcEstimate {
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    std_err: f64,
    #[pyo3(get)]
    n: u64,
}

impl From<montecarlo::McEstimate> for PyMcEstimate {
    fn from(e: montecarlo::McEstimate) -> Self {
        Self {
            value: e.value,
            std_err: e.std_err,
            n: e.n,
        }
    }
}

#[pymethods]
impl PyMcEstimate {
    /// `(analytical - value) / std_err`.
    fn z_score(&self, analytical: f64) -> PyResult<f64> {
        let e = montecarlo::McEstimate {
            value: self.value,
            std_err: self.std_err,
            n: self.n,
        };
        montecarlo::compare(analytical, &e).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "McEstimate(value={}, std_err={}, n={})",
            self.value, self.std_err, self.n
        )
    }
}

/// Link-state counts of a simulation run.
#[pyclass(name = "LinkCounts", frozen)]
struct PyLinkCounts {
    inner: montecarlo::LinkCounts,
}

#[pymethods]
impl PyLinkCounts {
    fn transition(&self, b: usize, a: usize) -> PyResult<PyMcEstimate> {
        Ok(self
            .inner
            .transition()
            .get(state(b)?, state(a)?)
            .map_err(to_py)?
            .into())
    }

    fn steady_state(&self) -> PyMcEstimate {
        self.inner.steady_state().into()
    }

    fn entropy_rate(&self) -> PyResult<PyMcEstimate> {
        Ok(self.inner.entropy_rate().map_err(to_py)?.into())
    }

    fn mutual_info_ratio(&self) -> PyResult<PyMcEstimate> {
        Ok(self.inner.mutual_info_ratio().map_err(to_py)?.into())
    }
}

#[pyfunction]
fn log_bessel_i(order: u32, x: f64) -> PyResult<f64> {
    numerics::log_bessel_i(order, x).map_err(to_py)
}

#[pyfunction]
fn marcum_q1(a: f64, b: f64) -> PyResult<f64> {
    numerics::marcum_q1(a, b).map_err(to_py)
}

/// Rician density with offset `nu` [m] and scale `g` [m^2].
#[pyfunction]
fn rician_pdf(r: f64, nu: f64, g: f64) -> PyResult<f64> {
    pdf(r, &RicianLaw::new(nu, g).map_err(to_py)?).map_err(to_py)
}

#[pyfunction]
fn rician_cdf(r: f64, nu: f64, g: f64) -> PyResult<f64> {
    cdf(r, &RicianLaw::new(nu, g).map_err(to_py)?).map_err(to_py)
}

/// `(P(L = 0), P(L = 1))` under the stationary distance law.
#[pyfunction]
fn steady_state_link_prob(beta: f64, params: &PyOUParams, r0: f64) -> PyResult<(f64, f64)> {
    let p = linkstab::distance::steady_state_link_prob(beta, &params.inner, r0).map_err(to_py)?;
    Ok((p[0], p[1]))
}

#[pyfunction]
fn connection_range(psi: f64, gamma0: f64, eta: f64) -> PyResult<f64> {
    linkmodel::connection_range(psi, gamma0, eta).map_err(to_py)
}

#[pyfunction]
fn markov_validity(dt: f64, tau: f64) -> bool {
    linkmodel::markov_validity(dt, tau)
}

#[pyfunction]
fn marginal_entropy(pi: (f64, f64)) -> f64 {
    linkmodel::marginal_entropy([pi.0, pi.1])
}

/// Stationary joint density of the distance at three instants `dt` apart.
#[pyfunction]
#[pyo3(signature = (r1, r2, r3, dt, params, beta, max_q=60, max_p=60))]
#[allow(clippy::too_many_arguments)]
fn trivariate_pdf(
    r1: f64,
    r2: f64,
    r3: f64,
    dt: f64,
    params: &PyOUParams,
    beta: f64,
    max_q: usize,
    max_p: usize,
) -> PyResult<f64> {
    let trunc = SeriesTruncation::new(max_q, max_p, SeriesTruncation::default().term_rel_tol)
        .map_err(to_py)?;
    let p = TrivariateParams::stationary(dt, &params.inner, beta, trunc).map_err(to_py)?;
    linkstab::jointdist::trivariate_pdf(r1, r2, r3, &p).map_err(to_py)
}

/// Transition matrix, three-step pmf and information measures.
#[pyfunction]
#[pyo3(signature = (dt, params, beta, r0, max_q=60, max_p=60, nodes_per_panel=48, panels_per_dim=4))]
#[allow(clippy::too_many_arguments)]
fn analyze(
    py: Python<'_>,
    dt: f64,
    params: &PyOUParams,
    beta: f64,
    r0: f64,
    max_q: usize,
    max_p: usize,
    nodes_per_panel: usize,
    panels_per_dim: usize,
) -> PyResult<PyLinkAnalysis> {
    let trunc = SeriesTruncation::new(max_q, max_p, SeriesTruncation::default().term_rel_tol)
        .map_err(to_py)?;
    let quad = QuadratureSpec {
        nodes_per_panel,
        panels_per_dim,
        ..QuadratureSpec::default()
    };
    let model = ConnectionModel::new(r0).map_err(to_py)?;
    let inner = params.inner;
    let result = py.detach(|| linkmodel::analyze(dt, &inner, beta, &model, &trunc, &quad));
    Ok(PyLinkAnalysis {
        inner: result.map_err(to_py)?,
    })
}

/// Inter-node distances at `k` instants for nodes parked at (0,0), (beta,0).
#[pyfunction]
#[pyo3(signature = (dt, params, beta, k, seed, stationary_start=true))]
fn simulate_distance_sequence(
    dt: f64,
    params: &PyOUParams,
    beta: f64,
    k: usize,
    seed: u64,
    stationary_start: bool,
) -> PyResult<Vec<f64>> {
    use rand::SeedableRng;
    let cfg = PairConfig::from_params(&params.inner, beta).map_err(to_py)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    mobility::simulate_distance_sequence(&cfg, dt, k, &mut rng, stationary_start).map_err(to_py)
}

/// Runs the simulation oracle and returns the link-state counts.
#[pyfunction]
#[pyo3(signature = (dt, params, beta, r0, n_samples=1_000_000, seed=0, chains=1024))]
#[allow(clippy::too_many_arguments)]
fn simulate_link_counts(
    py: Python<'_>,
    dt: f64,
    params: &PyOUParams,
    beta: f64,
    r0: f64,
    n_samples: u64,
    seed: u64,
    chains: usize,
) -> PyResult<PyLinkCounts> {
    let config = McConfig {
        n_samples,
        seed,
        chains,
        ..McConfig::default()
    };
    let model = ConnectionModel::new(r0).map_err(to_py)?;
    let inner = params.inner;
    let counts = py.detach(|| montecarlo::simulate_counts(&config, dt, &inner, beta, &model));
    Ok(PyLinkCounts {
        inner: counts.map_err(to_py)?,
    })
}

#[pymodule]
fn linkstab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOUParams>()?;
    m.add_class::<PyTransitionMatrix>()?;
    m.add_class::<PyLinkAnalysis>()?;
    m.add_class::<PyMcEstimate>()?;
    m.add_class::<PyLinkCounts>()?;
    m.add_function(wrap_pyfunction!(log_bessel_i, m)?)?;
    m.add_function(wrap_pyfunction!(marcum_q1, m)?)?;
    m.add_function(wrap_pyfunction!(rician_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(rician_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state_link_prob, m)?)?;
    m.add_function(wrap_pyfunction!(connection_range, m)?)?;
    m.add_function(wrap_pyfunction!(markov_validity, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(trivariate_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_distance_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_link_counts, m)?)?;
    Ok(())
}
