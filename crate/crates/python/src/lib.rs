//! Python bindings for the recursive mixture filters.
//!
//! States and models are exposed as small classes; harness entry points take
//! and return JSON strings in the same schema as the command-line tool.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mixture_ep::density::{KnownDensity, KnownDensityPair, KnownDensitySet};
use mixture_ep::dirichlet::{self, DirichletState, SecondMomentPolicy};
use mixture_ep::gaussian_mean::{self, GaussianState, MeanComponent, MeanMixtureModel};
use mixture_ep::harness::{self, ExperimentConfig, LemmaConfig};
use mixture_ep::oracle;
use mixture_ep::quadrature::QuadratureSpec;
use mixture_ep::special::{self, SolverSettings};
use mixture_ep::weight::{self, BetaState, EpOptions};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "BetaState", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyBetaState(BetaState);

#[pymethods]
impl PyBetaState {
    #[new]
    fn new(a: f64, b: f64) -> PyResult<Self> {
        BetaState::new(a, b).map(Self).map_err(value_error)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }

    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn variance(&self) -> f64 {
        self.0.variance()
    }

    fn __repr__(&self) -> String {
        format!("BetaState(a={}, b={})", self.0.a, self.0.b)
    }
}

#[pyclass(name = "GaussianState", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGaussianState(GaussianState);

#[pymethods]
impl PyGaussianState {
    #[new]
    fn new(a: f64, b: f64) -> PyResult<Self> {
        GaussianState::new(a, b).map(Self).map_err(value_error)
    }

    /// Posterior mean.
    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    /// Posterior variance.
    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }

    fn precision(&self) -> f64 {
        self.0.precision()
    }

    fn __repr__(&self) -> String {
        format!("GaussianState(a={}, b={})", self.0.a, self.0.b)
    }
}

#[pyclass(name = "DirichletState", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDirichletState(DirichletState);

#[pymethods]
impl PyDirichletState {
    #[new]
    fn new(a: Vec<f64>) -> PyResult<Self> {
        DirichletState::new(a).map(Self).map_err(value_error)
    }

    #[getter]
    fn a(&self) -> Vec<f64> {
        self.0.a.clone()
    }

    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn means(&self) -> Vec<f64> {
        self.0.means()
    }

    fn variances(&self) -> Vec<f64> {
        self.0.variances()
    }

    fn __repr__(&self) -> String {
        format!("DirichletState(a={:?})", self.0.a)
    }
}

/// Two known component densities, given as JSON objects such as
/// `{"kind": "gaussian", "mean": 0, "sd": 1}`.
#[pyclass(name = "KnownDensityPair", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKnownDensityPair(KnownDensityPair);

#[pymethods]
impl PyKnownDensityPair {
    #[new]
    fn new(f1: &str, f2: &str) -> PyResult<Self> {
        let parse = |text: &str| serde_json::from_str::<KnownDensity>(text).map_err(value_error);
        KnownDensityPair::new(parse(f1)?, parse(f2)?)
            .map(Self)
            .map_err(value_error)
    }

    #[staticmethod]
    fn gaussians(mean1: f64, sd1: f64, mean2: f64, sd2: f64) -> PyResult<Self> {
        KnownDensityPair::gaussians(mean1, sd1, mean2, sd2)
            .map(Self)
            .map_err(value_error)
    }

    fn pdf(&self, x: f64) -> (f64, f64) {
        (self.0.f1.pdf(x), self.0.f2.pdf(x))
    }
}

#[pyclass(name = "MeanMixtureModel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMeanMixtureModel(MeanMixtureModel);

#[pymethods]
impl PyMeanMixtureModel {
    /// Components as (multiplier on μ, sd, weight) triples.
    #[new]
    fn new(components: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let components = components
            .into_iter()
            .map(|(c, sigma, v)| MeanComponent { c, sigma, v })
            .collect();
        MeanMixtureModel::new(components)
            .map(Self)
            .map_err(value_error)
    }

    #[staticmethod]
    fn symmetric() -> Self {
        Self(MeanMixtureModel::symmetric())
    }

    #[staticmethod]
    fn clutter(v: f64) -> PyResult<Self> {
        MeanMixtureModel::clutter(v).map(Self).map_err(value_error)
    }

    fn components(&self) -> Vec<(f64, f64, f64)> {
        self.0
            .components()
            .iter()
            .map(|c| (c.c, c.sigma, c.v))
            .collect()
    }
}

#[pyfunction]
fn log_gamma(x: f64) -> PyResult<f64> {
    special::log_gamma(x).map_err(value_error)
}

#[pyfunction]
fn digamma(x: f64) -> PyResult<f64> {
    special::digamma(x).map_err(value_error)
}

#[pyfunction]
fn trigamma(x: f64) -> PyResult<f64> {
    special::trigamma(x).map_err(value_error)
}

/// Beta hyperparameters whose log-moments equal the targets.
#[pyfunction]
fn solve_digamma_system(r1: f64, r2: f64, start: (f64, f64)) -> PyResult<(f64, f64)> {
    let root = special::solve_digamma_system(r1, r2, start, &SolverSettings::default())
        .map_err(value_error)?;
    Ok((root.a, root.b))
}

#[pyfunction]
fn responsibility(pair: &PyKnownDensityPair, state: &PyBetaState, x: f64) -> PyResult<f64> {
    weight::responsibility(&pair.0, &state.0, x).map_err(value_error)
}

#[pyfunction]
fn quasi_bayes_update(
    pair: &PyKnownDensityPair,
    state: &PyBetaState,
    x: f64,
) -> PyResult<PyBetaState> {
    let (next, _) = weight::quasi_bayes_update(&pair.0, &state.0, x).map_err(value_error)?;
    Ok(PyBetaState(next))
}

#[pyfunction]
fn pe_update(pair: &PyKnownDensityPair, state: &PyBetaState, x: f64) -> PyResult<PyBetaState> {
    let (next, _) = weight::pe_update(&pair.0, &state.0, x).map_err(value_error)?;
    Ok(PyBetaState(next))
}

#[pyfunction]
fn kl_update(pair: &PyKnownDensityPair, state: &PyBetaState, x: f64) -> PyResult<PyBetaState> {
    let (next, _) =
        weight::kl_update(&pair.0, &state.0, x, &SolverSettings::default()).map_err(value_error)?;
    Ok(PyBetaState(next))
}

#[pyfunction]
fn vb_update(pair: &PyKnownDensityPair, state: &PyBetaState, x: f64) -> PyResult<PyBetaState> {
    let (next, _) = weight::vb_recursive_update(&pair.0, &state.0, x).map_err(value_error)?;
    Ok(PyBetaState(next))
}

/// 1-based label: 1 for f1, 2 for f2.
#[pyfunction]
fn confirmed_update(state: &PyBetaState, z: usize) -> PyResult<PyBetaState> {
    weight::confirmed_update(&state.0, z)
        .map(PyBetaState)
        .map_err(value_error)
}

/// Expectation propagation with moment-matching sites; returns the fitted
/// state and whether the sweeps converged.
#[pyfunction]
fn ep_fit(
    pair: &PyKnownDensityPair,
    prior: &PyBetaState,
    data: Vec<f64>,
) -> PyResult<(PyBetaState, bool)> {
    let fit =
        weight::ep_fit(&pair.0, &prior.0, &data, &EpOptions::default()).map_err(value_error)?;
    Ok((PyBetaState(fit.state), fit.converged))
}

#[pyfunction]
fn adf_update(
    model: &PyMeanMixtureModel,
    state: &PyGaussianState,
    x: f64,
) -> PyResult<PyGaussianState> {
    gaussian_mean::adf_update(&model.0, &state.0, x)
        .map(PyGaussianState)
        .map_err(value_error)
}

#[pyfunction]
fn log_density(model: &PyMeanMixtureModel, mu: f64, x: f64) -> f64 {
    gaussian_mean::log_density(&model.0, mu, x)
}

#[pyfunction]
fn score(model: &PyMeanMixtureModel, mu: f64, x: f64) -> f64 {
    gaussian_mean::score(&model.0, mu, x)
}

#[pyfunction]
fn observed_information(model: &PyMeanMixtureModel, mu: f64, x: f64) -> f64 {
    gaussian_mean::observed_information(&model.0, mu, x)
}

/// Densities as a list of JSON objects; `policy` is "avg-variance" or
/// "avg-variance-covariance".
#[pyfunction]
#[pyo3(signature = (densities, state, x, policy = "avg-variance"))]
fn dir_pe_update(
    densities: Vec<String>,
    state: &PyDirichletState,
    x: f64,
    policy: &str,
) -> PyResult<PyDirichletState> {
    let densities = densities
        .iter()
        .map(|text| serde_json::from_str::<KnownDensity>(text).map_err(value_error))
        .collect::<PyResult<Vec<_>>>()?;
    let set = KnownDensitySet::new(densities).map_err(value_error)?;
    let policy: SecondMomentPolicy =
        serde_json::from_value(serde_json::Value::from(policy)).map_err(value_error)?;
    dirichlet::dir_pe_update(&set, &state.0, x, policy)
        .map(PyDirichletState)
        .map_err(value_error)
}

#[pyfunction]
fn fisher_information_beta(pair: &PyKnownDensityPair, beta: f64) -> PyResult<f64> {
    oracle::fisher_information_beta(&pair.0, beta, &QuadratureSpec::default()).map_err(value_error)
}

#[pyfunction]
fn fisher_information_mu(model: &PyMeanMixtureModel, mu: f64) -> PyResult<f64> {
    oracle::fisher_information_mu(&model.0, mu, &QuadratureSpec::default()).map_err(value_error)
}

/// Exact posterior mean and variance of the weight on a quadrature grid.
#[pyfunction]
fn grid_beta_posterior(
    pair: &PyKnownDensityPair,
    prior: &PyBetaState,
    data: Vec<f64>,
) -> PyResult<(f64, f64)> {
    let summary = oracle::grid_beta_posterior(&pair.0, &prior.0, &data, &QuadratureSpec::default())
        .map_err(value_error)?;
    Ok((summary.mean, summary.variance))
}

/// Runs an experiment config (JSON text) and returns the trace and summary
/// as JSON text.
#[pyfunction]
fn run_experiment(config: &str) -> PyResult<(String, String)> {
    let config = ExperimentConfig::from_json(config).map_err(value_error)?;
    let output = harness::run(&config).map_err(value_error)?;
    let trace = serde_json::to_string(&output.trace).map_err(value_error)?;
    let summary = serde_json::to_string(&output.summary).map_err(value_error)?;
    Ok((trace, summary))
}

/// Lemma sweep report as JSON text; the default sweep when `config` is None.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn check_lemma(config: Option<&str>) -> PyResult<String> {
    let config = match config {
        Some(text) => serde_json::from_str::<LemmaConfig>(text).map_err(value_error)?,
        None => LemmaConfig::default(),
    };
    let report = harness::check_lemma(&config).map_err(value_error)?;
    serde_json::to_string(&report).map_err(value_error)
}

#[pymodule(name = "mixture_ep")]
fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBetaState>()?;
    m.add_class::<PyGaussianState>()?;
    m.add_class::<PyDirichletState>()?;
    m.add_class::<PyKnownDensityPair>()?;
    m.add_class::<PyMeanMixtureModel>()?;
    m.add_function(wrap_pyfunction!(log_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(digamma, m)?)?;
    m.add_function(wrap_pyfunction!(trigamma, m)?)?;
    m.add_function(wrap_pyfunction!(solve_digamma_system, m)?)?;
    m.add_function(wrap_pyfunction!(responsibility, m)?)?;
    m.add_function(wrap_pyfunction!(quasi_bayes_update, m)?)?;
    m.add_function(wrap_pyfunction!(pe_update, m)?)?;
    m.add_function(wrap_pyfunction!(kl_update, m)?)?;
    m.add_function(wrap_pyfunction!(vb_update, m)?)?;
    m.add_function(wrap_pyfunction!(confirmed_update, m)?)?;
    m.add_function(wrap_pyfunction!(ep_fit, m)?)?;
    m.add_function(wrap_pyfunction!(adf_update, m)?)?;
    m.add_function(wrap_pyfunction!(log_density, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(observed_information, m)?)?;
    m.add_function(wrap_pyfunction!(dir_pe_update, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_information_beta, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_information_mu, m)?)?;
    m.add_function(wrap_pyfunction!(grid_beta_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(check_lemma, m)?)?;
    Ok(())
}
