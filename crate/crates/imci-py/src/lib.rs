//! Python bindings for the constrained-parameter interval estimators.
//!
//! Build with `cargo build --release -p imci-py`; the resulting cdylib is
//! importable as `imci` (see python/smoke_test.py for a loader).

use imci_core::normal::{bayes_normal_ci, im_normal_ci, im_normal_plausibility, NormalData};
use imci_core::poisson::bayes::{
    bayes_poisson_ci, posterior_cdf as core_posterior_cdf,
    posterior_log_density as core_posterior_log_density, PriorSpec,
};
use imci_core::poisson::im::{
    build_endpoint_sample, im_poisson_ci_from, im_poisson_plausibility_from,
};
use imci_core::poisson::nim::{
    build_nim_sample, nim_poisson_ci_from, nim_poisson_plausibility_from,
};
use imci_core::poisson::PoissonData;
use imci_core::sim::uniformity_diagnostic;
use imci_core::{Error as CoreError, Interval as CoreInterval};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py_err(e: CoreError) -> PyErr {
    match e {
        CoreError::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A confidence or credible interval with its level, method tag, and
/// boundary-truncation flags.
#[pyclass(name = "Interval", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyInterval {
    lower: f64,
    upper: f64,
    level: f64,
    method: String,
    truncated_lower: bool,
    truncated_upper: bool,
}

#[pymethods]
impl PyInterval {
    fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Closed-interval membership.
    fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    fn __repr__(&self) -> String {
        format!(
            "Interval(method='{}', level={}, lower={}, upper={})",
            self.method, self.level, self.lower, self.upper
        )
    }
}

impl From<CoreInterval> for PyInterval {
    fn from(iv: CoreInterval) -> PyInterval {
        PyInterval {
            lower: iv.lower,
            upper: iv.upper,
            level: iv.level.value(),
            method: iv.method.as_str().to_string(),
            truncated_lower: iv.truncated_lower,
            truncated_upper: iv.truncated_upper,
        }
    }
}

/// Bayesian credible interval for a nonnegative normal mean, from the
/// observation pair (x, w) with r degrees of freedom.
#[pyfunction]
fn normal_bayes_ci(x: f64, w: f64, r: u32, alpha: f64) -> PyResult<PyInterval> {
    let d = NormalData::new(x, w, r).map_err(to_py_err)?;
    Ok(bayes_normal_ci(&d, alpha).map_err(to_py_err)?.into())
}

/// IM confidence interval for a nonnegative normal mean.
#[pyfunction]
fn normal_im_ci(x: f64, w: f64, r: u32, alpha: f64) -> PyResult<PyInterval> {
    let d = NormalData::new(x, w, r).map_err(to_py_err)?;
    Ok(im_normal_ci(&d, alpha).map_err(to_py_err)?.into())
}

/// IM plausibility of the assertion theta = theta0.
#[pyfunction]
fn normal_im_plausibility(x: f64, w: f64, r: u32, theta0: f64) -> PyResult<f64> {
    let d = NormalData::new(x, w, r).map_err(to_py_err)?;
    Ok(im_normal_plausibility(&d, theta0).map_err(to_py_err)?.value())
}

/// Bayesian (HPD) credible interval for the Poisson signal rate.
#[pyfunction]
#[pyo3(signature = (x, w, m, alpha, a=1.0, b=0.0))]
fn poisson_bayes_ci(x: u64, w: u64, m: f64, alpha: f64, a: f64, b: f64) -> PyResult<PyInterval> {
    let d = PoissonData::new(x, w, m).map_err(to_py_err)?;
    let prior = PriorSpec::new(a, b).map_err(to_py_err)?;
    Ok(bayes_poisson_ci(&d, &prior, alpha).map_err(to_py_err)?.into())
}

/// Posterior log density of the signal rate at lambda.
#[pyfunction]
#[pyo3(signature = (x, w, m, lam, a=1.0, b=0.0))]
fn poisson_posterior_log_density(x: u64, w: u64, m: f64, lam: f64, a: f64, b: f64) -> PyResult<f64> {
    let d = PoissonData::new(x, w, m).map_err(to_py_err)?;
    let prior = PriorSpec::new(a, b).map_err(to_py_err)?;
    core_posterior_log_density(&d, &prior, lam).map_err(to_py_err)
}

/// Posterior distribution function of the signal rate at lambda.
#[pyfunction]
#[pyo3(signature = (x, w, m, lam, a=1.0, b=0.0))]
fn poisson_posterior_cdf(x: u64, w: u64, m: f64, lam: f64, a: f64, b: f64) -> PyResult<f64> {
    let d = PoissonData::new(x, w, m).map_err(to_py_err)?;
    let prior = PriorSpec::new(a, b).map_err(to_py_err)?;
    Ok(core_posterior_cdf(&d, &prior, lam).map_err(to_py_err)?.value())
}

/// Monte Carlo IM confidence interval for the Poisson signal rate.
#[pyfunction]
#[pyo3(signature = (x, w, m, alpha, n=10_000, seed=0))]
fn poisson_im_ci(x: u64, w: u64, m: f64, alpha: f64, n: usize, seed: u64) -> PyResult<PyInterval> {
    let d = PoissonData::new(x, w, m).map_err(to_py_err)?;
    let sample = build_endpoint_sample(&d, n, seed).map_err(to_py_err)?;
    Ok(im_poisson_ci_from(&sample, alpha).map_err(to_py_err)?.into())
}

/// NIM (random-weighting) confidence interval for the Poisson signal rate.
#[pyfunction]
#[pyo3(signature = (x, w, m, alpha, n=10_000, seed=0))]
fn poisson_nim_ci(x: u64, w: u64, m: f64, alpha: f64, n: usize, seed: u64) -> PyResult<PyInterval> {
    let d = PoissonData::new(x, w, m).map_err(to_py_err)?;
    let sample = build_nim_sample(&d, n, seed).map_err(to_py_err)?;
    Ok(nim_poisson_ci_from(&sample, alpha).map_err(to_py_err)?.into())
}

/// IM plausibility of the assertion lambda = lambda0.
#[pyfunction]
#[pyo3(signature = (x, w, m, lambda0, n=10_000, seed=0))]
fn poisson_im_plausibility(
    x: u64,
    w: u64,
    m: f64,
    lambda0: f64,
    n: usize,
    seed: u64,
) -> PyResult<f64> {
    let d = PoissonData::new(x, w, m).map_err(to_py_err)?;
    let sample = build_endpoint_sample(&d, n, seed).map_err(to_py_err)?;
    Ok(im_poisson_plausibility_from(&sample, lambda0).map_err(to_py_err)?.value())
}

/// NIM plausibility of the assertion lambda = lambda0.
#[pyfunction]
#[pyo3(signature = (x, w, m, lambda0, n=10_000, seed=0))]
fn poisson_nim_plausibility(
    x: u64,
    w: u64,
    m: f64,
    lambda0: f64,
    n: usize,
    seed: u64,
) -> PyResult<f64> {
    let d = PoissonData::new(x, w, m).map_err(to_py_err)?;
    let sample = build_nim_sample(&d, n, seed).map_err(to_py_err)?;
    Ok(nim_poisson_plausibility_from(&sample, lambda0).map_err(to_py_err)?.value())
}

/// The raw NIM draws lambda^(i) = max(0, theta_i - eps_i) for one dataset.
#[pyfunction]
#[pyo3(signature = (x, w, m, n=10_000, seed=0))]
fn poisson_nim_draws(x: u64, w: u64, m: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let d = PoissonData::new(x, w, m).map_err(to_py_err)?;
    Ok(build_nim_sample(&d, n, seed).map_err(to_py_err)?.draws)
}

/// Paired draws of the IM endpoint pair (lambda1, lambda2).
#[pyfunction]
#[pyo3(signature = (x, w, m, n=10_000, seed=0))]
fn poisson_im_endpoint_draws(
    x: u64,
    w: u64,
    m: f64,
    n: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let d = PoissonData::new(x, w, m).map_err(to_py_err)?;
    let s = build_endpoint_sample(&d, n, seed).map_err(to_py_err)?;
    Ok((s.lower_draws, s.upper_draws))
}

/// KS distance of the NIM auxiliary values to Unif(0,1) at a truth point.
#[pyfunction]
#[pyo3(signature = (lam, epsilon, m, samples=1000, n=1000, seed=0))]
fn uniformity_ks(
    lam: f64,
    epsilon: f64,
    m: f64,
    samples: usize,
    n: usize,
    seed: u64,
) -> PyResult<f64> {
    Ok(uniformity_diagnostic(lam, epsilon, m, samples, n, seed)
        .map_err(to_py_err)?
        .ks_distance)
}

#[pymodule]
fn imci(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInterval>()?;
    m.add_function(wrap_pyfunction!(normal_bayes_ci, m)?)?;
    m.add_function(wrap_pyfunction!(normal_im_ci, m)?)?;
    m.add_function(wrap_pyfunction!(normal_im_plausibility, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_bayes_ci, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_posterior_log_density, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_posterior_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_im_ci, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_nim_ci, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_im_plausibility, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_nim_plausibility, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_nim_draws, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_im_endpoint_draws, m)?)?;
    m.add_function(wrap_pyfunction!(uniformity_ks, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
