//! Python bindings for the `lcmle` crate.

use lcmle::bench::{self, ExperimentConfig};
use lcmle::estimate::{self, Estimator, OptimizerConfig};
use lcmle::lcdens::{self, DEFAULT_TOL};
use lcmle::metrics::{self, EmpiricalDist};
use lcmle::tsmodel::{self, InnovationFamily, InnovationSpec, ModelSpec, ScalingConvention, DEFAULT_BURN_IN, DEFAULT_DELTA};
use lcmle::{Error, LogConcaveDensity, SmoothedDensity, WeightedSample};
use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotFound(_) => PyKeyError::new_err(e.to_string()),
        Error::FitFailure(_) | Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Piecewise-linear log-concave density.
#[pyclass(name = "LogConcaveDensity", module = "lcmle", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDensity {
    inner: LogConcaveDensity,
}

#[pymethods]
impl PyDensity {
    #[new]
    fn new(knots: Vec<f64>, logvals: Vec<f64>) -> PyResult<Self> {
        LogConcaveDensity::new(knots, logvals).map(|inner| PyDensity { inner }).map_err(py_err)
    }

    #[getter]
    fn knots(&self) -> Vec<f64> {
        self.inner.knots().to_vec()
    }

    #[getter]
    fn logvals(&self) -> Vec<f64> {
        self.inner.logvals().to_vec()
    }

    #[getter]
    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.density_at(x)
    }

    fn log_pdf(&self, x: f64) -> f64 {
        self.inner.log_density_at(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf_at(x)
    }

    fn quantile(&self, p: f64) -> PyResult<f64> {
        self.inner.quantile(p).map_err(py_err)
    }

    /// `(mean, second moment)`.
    fn moments(&self) -> (f64, f64) {
        self.inner.moments()
    }

    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.inner.sample(n, seed)
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        from_json(text).map(|inner| PyDensity { inner })
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.inner.support();
        format!("LogConcaveDensity(knots={}, support=({lo}, {hi}))", self.inner.knots().len())
    }
}

/// Log-concave density convolved with a centred Gaussian.
#[pyclass(name = "SmoothedDensity", module = "lcmle", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySmoothed {
    inner: SmoothedDensity,
}

#[pymethods]
impl PySmoothed {
    #[new]
    fn new(base: &PyDensity, bandwidth_var: f64) -> PyResult<Self> {
        SmoothedDensity::new(base.inner.clone(), bandwidth_var).map(|inner| PySmoothed { inner }).map_err(py_err)
    }

    #[getter]
    fn base(&self) -> PyDensity {
        PyDensity { inner: self.inner.base.clone() }
    }

    #[getter]
    fn bandwidth_var(&self) -> f64 {
        self.inner.bandwidth_var
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.density_at(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf_at(x)
    }

    fn quantile(&self, p: f64) -> PyResult<f64> {
        self.inner.quantile(p).map_err(py_err)
    }

    fn moments(&self) -> (f64, f64) {
        self.inner.moments()
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }
}

/// Output of [`fit`].
#[pyclass(name = "FitResult", module = "lcmle", frozen)]
struct PyFit {
    inner: estimate::FitResult,
}

#[pymethods]
impl PyFit {
    #[getter]
    fn estimator(&self) -> &'static str {
        self.inner.estimator.name()
    }

    #[getter]
    fn a(&self) -> Vec<f64> {
        self.inner.theta_hat.a.clone()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.inner.theta_hat.b.clone()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.theta_hat.c
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.theta_hat.alpha.clone()
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.theta_hat.beta.clone()
    }

    #[getter]
    fn c_hat(&self) -> Option<f64> {
        self.inner.c_hat
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.diagnostics.converged
    }

    #[getter]
    fn density(&self) -> Option<PyDensity> {
        self.inner.density.clone().map(|inner| PyDensity { inner })
    }

    #[getter]
    fn smoothed(&self) -> Option<PySmoothed> {
        self.inner.smoothed.clone().map(|inner| PySmoothed { inner })
    }

    fn standardized_residuals(&self, series: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.standardized_residuals(&series).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("FitResult(estimator={}, spec={}, objective={})", self.inner.estimator.name(), self.inner.spec.label(), self.inner.objective)
    }
}

/// Log-concave maximum likelihood density of a (weighted) sample.
#[pyfunction]
#[pyo3(signature = (points, weights = None, tol = DEFAULT_TOL))]
fn fit_density(py: Python<'_>, points: Vec<f64>, weights: Option<Vec<f64>>, tol: f64) -> PyResult<PyDensity> {
    let sample = match weights {
        Some(w) => WeightedSample::new(&points, &w),
        None => WeightedSample::from_values(&points),
    }
    .map_err(py_err)?;
    py.detach(|| lcdens::fit(&sample, tol)).map(|inner| PyDensity { inner }).map_err(py_err)
}

/// Simulates a preset model.
#[pyfunction]
#[pyo3(signature = (preset, innovation, n, seed = 0, convention = None, burn_in = DEFAULT_BURN_IN, k = 1.0))]
fn simulate(
    preset: &str,
    innovation: &str,
    n: usize,
    seed: u64,
    convention: Option<&str>,
    burn_in: usize,
    k: f64,
) -> PyResult<Vec<f64>> {
    let (spec, theta) = bench::preset(preset).map_err(py_err)?;
    let family = InnovationFamily::parse(innovation).map_err(py_err)?;
    let convention = match convention {
        Some(c) => ScalingConvention::parse(c).map_err(py_err)?,
        None if spec.is_arma() => ScalingConvention::UnitVariance,
        None => ScalingConvention::UnitSecondMoment,
    };
    let ispec = InnovationSpec::new(family, convention).with_k(k);
    tsmodel::simulate(&spec, &theta, &ispec, n, burn_in, seed).map_err(py_err)
}

/// Fits an ARMA(p, q)-GARCH(r, s) model with the log-concave or Gaussian
/// quasi-likelihood estimator.
#[pyfunction]
#[pyo3(signature = (series, p = 0, q = 0, r = 0, s = 0, estimator = "lcmle", delta = DEFAULT_DELTA, restarts = None))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    series: Vec<f64>,
    p: usize,
    q: usize,
    r: usize,
    s: usize,
    estimator: &str,
    delta: f64,
    restarts: Option<usize>,
) -> PyResult<PyFit> {
    let spec = ModelSpec::new(p, q, r, s).map_err(py_err)?;
    let estimator = Estimator::parse(estimator).map_err(py_err)?;
    let mut cfg = OptimizerConfig::default();
    if let Some(k) = restarts {
        cfg.restarts = k;
    }
    py.detach(|| estimate::fit(&series, &spec, estimator, delta, &cfg)).map(|inner| PyFit { inner }).map_err(py_err)
}

/// Sample partial autocorrelations at lags `1..=max_lag`.
#[pyfunction]
#[pyo3(signature = (series, max_lag = 20))]
fn pacf(series: Vec<f64>, max_lag: usize) -> PyResult<Vec<f64>> {
    metrics::pacf(&series, max_lag).map_err(py_err)
}

/// Mallows (first Wasserstein) distance between two discrete distributions.
#[pyfunction]
#[pyo3(signature = (a, b, weights_a = None, weights_b = None))]
fn mallows_d1(a: Vec<f64>, b: Vec<f64>, weights_a: Option<Vec<f64>>, weights_b: Option<Vec<f64>>) -> PyResult<f64> {
    let dist = |x: &[f64], w: Option<Vec<f64>>| match w {
        Some(w) => EmpiricalDist::new(x, &w),
        None => EmpiricalDist::uniform(x),
    };
    let a = dist(&a, weights_a).map_err(py_err)?;
    let b = dist(&b, weights_b).map_err(py_err)?;
    Ok(metrics::mallows_d1(&a, &b))
}

/// Orders `(p, q, r, s)` and true coefficients `(a, b, c, alpha, beta)` of a preset.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn preset(name: &str) -> PyResult<((usize, usize, usize, usize), (Vec<f64>, Vec<f64>, f64, Vec<f64>, Vec<f64>))> {
    let (s, t) = bench::preset(name).map_err(py_err)?;
    Ok(((s.p, s.q, s.r, s.s), (t.a, t.b, t.c, t.alpha, t.beta)))
}

/// Runs a benchmark described by a TOML document and returns the JSON report.
#[pyfunction]
fn run_bench(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml(config).map_err(py_err)?;
    let report = py.detach(|| bench::run_experiment(&cfg)).map_err(py_err)?;
    report.to_json().map_err(py_err)
}

#[pymodule]
#[pyo3(name = "lcmle")]
fn lcmle_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensity>()?;
    m.add_class::<PySmoothed>()?;
    m.add_class::<PyFit>()?;
    m.add_function(wrap_pyfunction!(fit_density, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(pacf, m)?)?;
    m.add_function(wrap_pyfunction!(mallows_d1, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add("PRESETS", bench::PRESETS.to_vec())?;
    Ok(())
}
