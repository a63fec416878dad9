//! Python bindings: `import pysinelike`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sinelike::{dataset, estimation, gompertz, metrics, model, simulate};

create_exception!(pysinelike, SineLikeError, PyValueError);

fn to_py(err: sinelike::Error) -> PyErr {
    SineLikeError::new_err(format!("[{}] {}", err.kind(), err))
}

type PyRes<T> = PyResult<T>;

trait IntoPyRes<T> {
    fn py(self) -> PyRes<T>;
}

impl<T> IntoPyRes<T> for sinelike::Result<T> {
    fn py(self) -> PyRes<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "SlParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PySlParams(model::SlParams);

#[pymethods]
impl PySlParams {
    #[new]
    fn new(lambda_: f64, sigma: f64) -> PyRes<Self> {
        model::SlParams::new(lambda_, sigma).py().map(Self)
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma()
    }

    fn __repr__(&self) -> String {
        format!("SlParams(lambda_={}, sigma={})", self.0.lambda(), self.0.sigma())
    }
}

#[pyclass(name = "TimeSeries", frozen, from_py_object)]
#[derive(Clone)]
struct PyTimeSeries(sinelike::TimeSeries);

#[pymethods]
impl PyTimeSeries {
    #[new]
    #[pyo3(signature = (times, values, label = String::new()))]
    fn new(times: Vec<f64>, values: Vec<f64>, label: String) -> PyRes<Self> {
        sinelike::TimeSeries::new(times, values, label).py().map(Self)
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label().to_string()
    }

    fn is_uniform(&self) -> bool {
        self.0.is_uniform()
    }

    fn select(&self, lo: f64, hi: f64) -> PyRes<Self> {
        self.0.select(lo, hi).py().map(Self)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "FitReport", frozen, from_py_object)]
#[derive(Clone)]
struct PyFitReport(estimation::FitReport);

#[pymethods]
impl PyFitReport {
    #[getter]
    fn params(&self) -> PySlParams {
        PySlParams(self.0.params)
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma()
    }

    #[getter]
    fn log_likelihood(&self) -> f64 {
        self.0.log_likelihood
    }

    #[getter]
    fn aic(&self) -> f64 {
        self.0.aic
    }

    #[getter]
    fn n_transitions(&self) -> usize {
        self.0.n_transitions
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.solver.converged
    }

    #[getter]
    fn standard_errors(&self) -> Option<(f64, f64)> {
        self.0.standard_errors.map(|s| (s.lambda, s.sigma))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("report serialises")
    }
}

#[pyfunction]
#[pyo3(signature = (id = dataset::US_NATGAS_ID))]
fn builtin_series(id: &str) -> PyRes<PyTimeSeries> {
    dataset::builtin(id).py().map(PyTimeSeries)
}

#[pyfunction]
fn load_series(path: &str) -> PyRes<PyTimeSeries> {
    dataset::load_file(path).py().map(PyTimeSeries)
}

#[pyfunction]
#[pyo3(signature = (series, bracket = (-5.0, 5.0), tol = 1e-10))]
fn fit_sl(series: &PyTimeSeries, bracket: (f64, f64), tol: f64) -> PyRes<PyFitReport> {
    let cfg = estimation::SearchConfig {
        bracket,
        tol,
        ..Default::default()
    };
    estimation::fit_sl(&series.0, &cfg).py().map(PyFitReport)
}

#[pyfunction]
fn log_likelihood(params: &PySlParams, series: &PyTimeSeries) -> PyRes<f64> {
    estimation::log_likelihood(&params.0, &series.0).py()
}

#[pyfunction]
fn lambda_score(lambda_: f64, series: &PyTimeSeries) -> PyRes<f64> {
    estimation::lambda_score(lambda_, &series.0).py()
}

#[pyfunction]
fn sigma2_profile(lambda_: f64, series: &PyTimeSeries) -> PyRes<f64> {
    estimation::sigma2_profile(lambda_, &series.0).py()
}

#[pyfunction]
fn transition_logpdf(params: &PySlParams, s: f64, t: f64, x_s: f64, y: f64) -> PyRes<f64> {
    model::transition_logpdf(&params.0, s, t, x_s, y).py()
}

#[pyfunction]
fn conditional_mean(params: &PySlParams, s: f64, t: f64, x_s: f64) -> PyRes<f64> {
    model::conditional_mean(&params.0, s, t, x_s).py()
}

#[pyfunction]
fn mean_function(params: &PySlParams, t1: f64, x1: f64, t: f64) -> PyRes<f64> {
    model::mean_function(&params.0, t1, x1, t).py()
}

#[pyfunction]
fn variance_function(params: &PySlParams, t1: f64, x1: f64, t: f64) -> PyRes<f64> {
    model::variance_function(&params.0, t1, x1, t).py()
}

#[pyfunction]
#[pyo3(signature = (params, t1, x1, t, level = 0.95))]
fn confidence_bounds(params: &PySlParams, t1: f64, x1: f64, t: f64, level: f64) -> PyRes<(f64, f64)> {
    model::confidence_bounds(&params.0, t1, x1, t, level).py()
}

/// Rows `(t, emf, ecmf, lower, upper)`.
#[pyfunction]
#[pyo3(signature = (report, series, horizon, level = 0.95))]
fn estimated_trends(
    report: &PyFitReport,
    series: &PyTimeSeries,
    horizon: Vec<f64>,
    level: f64,
) -> PyRes<Vec<(f64, f64, f64, f64, f64)>> {
    let rows = estimation::estimated_trends(&report.0, &series.0, &horizon, level).py()?;
    Ok(rows.iter().map(|r| (r.t, r.emf, r.ecmf, r.lower, r.upper)).collect())
}

/// Returns `(lambda, beta, sigma, log_likelihood, aic)`.
#[pyfunction]
fn fit_gompertz(series: &PyTimeSeries) -> PyRes<(f64, f64, f64, f64, f64)> {
    let f = gompertz::fit_gompertz(&series.0, &gompertz::GompertzSearch::default()).py()?;
    Ok((f.params.lambda(), f.params.beta(), f.params.sigma(), f.log_likelihood, f.aic))
}

#[pyfunction]
fn accuracy<'py>(py: Python<'py>, observed: Vec<f64>, predicted: Vec<f64>) -> PyRes<Bound<'py, PyDict>> {
    let r = metrics::accuracy(&observed, &predicted).py()?;
    let d = PyDict::new(py);
    d.set_item("mae", r.mae)?;
    d.set_item("rmse", r.rmse)?;
    d.set_item("mape", r.mape)?;
    d.set_item("mape_observed", r.mape_observed)?;
    d.set_item("n", r.n)?;
    d.set_item("classification", format!("{:?}", r.classification).to_lowercase())?;
    Ok(d)
}

/// Returns `(times, paths)`.
#[pyfunction]
#[pyo3(signature = (lambda_, sigma, t1, x1, dt, n_steps, n_paths, seed = 1))]
#[allow(clippy::too_many_arguments)]
fn simulate_paths(
    lambda_: f64,
    sigma: f64,
    t1: f64,
    x1: f64,
    dt: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> PyRes<(Vec<f64>, Vec<Vec<f64>>)> {
    let spec = simulate::SimulationSpec {
        lambda: lambda_,
        sigma,
        t1,
        x1,
        dt,
        n_steps,
        n_paths,
        seed,
    };
    let ens = simulate::simulate_ensemble(&spec).py()?;
    Ok((ens.times, ens.paths))
}

/// Runs the command-line interface in-process; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let argv = std::iter::once("sinelike".to_string()).chain(args);
    sinelike::cli::main_with_args(argv)
}

#[pymodule]
fn pysinelike(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SineLikeError", m.py().get_type::<SineLikeError>())?;
    m.add_class::<PySlParams>()?;
    m.add_class::<PyTimeSeries>()?;
    m.add_class::<PyFitReport>()?;
    m.add_function(wrap_pyfunction!(builtin_series, m)?)?;
    m.add_function(wrap_pyfunction!(load_series, m)?)?;
    m.add_function(wrap_pyfunction!(fit_sl, m)?)?;
    m.add_function(wrap_pyfunction!(log_likelihood, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_score, m)?)?;
    m.add_function(wrap_pyfunction!(sigma2_profile, m)?)?;
    m.add_function(wrap_pyfunction!(transition_logpdf, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_mean, m)?)?;
    m.add_function(wrap_pyfunction!(mean_function, m)?)?;
    m.add_function(wrap_pyfunction!(variance_function, m)?)?;
    m.add_function(wrap_pyfunction!(confidence_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(estimated_trends, m)?)?;
    m.add_function(wrap_pyfunction!(fit_gompertz, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_paths, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
