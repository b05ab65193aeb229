//! Python extension module exposing the estimators, samplers, and two-stage
//! solvers. Problems cross the boundary as JSON strings in the same format
//! the CLI consumes; randomness is controlled by explicit `(seed, stream)`
//! pairs exactly as in the Rust API.

use apub::bounds;
use apub::lp::{solve_lp, LpStatus};
use apub::lshaped::{self, LShapedConfig};
use apub::model::{build_extensive_form, TwoStageProblem};
use apub::sampling::{self, RngStream};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn sample_set(values: Vec<f64>) -> PyResult<bounds::SampleSet> {
    bounds::SampleSet::new(values).map_err(value_err)
}

/// A mean upper-bound estimate: value, tail level, bootstrap size (0 for
/// exact enumeration) and a batch-means standard error (0 for exact).
#[pyclass(name = "Estimate", skip_from_py_object)]
#[derive(Clone)]
struct PyEstimate {
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    n_bootstrap: usize,
    #[pyo3(get)]
    std_error: f64,
}

impl From<bounds::ApubEstimate> for PyEstimate {
    fn from(e: bounds::ApubEstimate) -> Self {
        PyEstimate {
            value: e.value,
            alpha: e.alpha,
            n_bootstrap: e.n_bootstrap,
            std_error: e.std_error,
        }
    }
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(value={}, alpha={}, n_bootstrap={}, std_error={})",
            self.value, self.alpha, self.n_bootstrap, self.std_error
        )
    }
}

/// Result of a two-stage solve: optimal value, first-stage point, and the
/// cut/iteration counters of the decomposition (zeros for the LP route).
#[pyclass(name = "SolveResult", skip_from_py_object)]
#[derive(Clone)]
struct PySolveResult {
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    x: Vec<f64>,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    feasibility_cuts: usize,
    #[pyo3(get)]
    optimality_cuts: usize,
}

#[pymethods]
impl PySolveResult {
    fn __repr__(&self) -> String {
        format!(
            "SolveResult(value={}, iterations={}, cuts={}+{})",
            self.value, self.iterations, self.feasibility_cuts, self.optimality_cuts
        )
    }
}

/// CVaR of a finite sample at tail level `alpha` in (0, 1].
#[pyfunction]
fn cvar_of_samples(values: Vec<f64>, alpha: f64) -> PyResult<f64> {
    bounds::cvar_of_samples(&values, alpha).map_err(value_err)
}

/// Empirical (1-alpha)-quantile of a finite sample, `alpha` in (0, 1).
#[pyfunction]
fn var_of_samples(values: Vec<f64>, alpha: f64) -> PyResult<f64> {
    bounds::var_of_samples(&values, alpha).map_err(value_err)
}

/// Probability of one multinomial(n, 1/n) resample-count vector.
#[pyfunction]
fn multinomial_pmf(counts: Vec<u32>) -> PyResult<f64> {
    let n = counts.len();
    let w = sampling::BootstrapWeights::new(counts).map_err(value_err)?;
    bounds::multinomial_pmf(n, &w).map_err(value_err)
}

/// Exact mean upper bound by full enumeration of the resampling support
/// (sample size at most 8).
#[pyfunction]
fn apub_exact(values: Vec<f64>, alpha: f64) -> PyResult<PyEstimate> {
    let s = sample_set(values)?;
    bounds::apub_exact(&s, alpha).map(Into::into).map_err(value_err)
}

/// Bootstrap mean upper bound with `m_bootstrap` resamples.
#[pyfunction]
#[pyo3(signature = (values, alpha, m_bootstrap, seed=0, stream=0))]
fn apub_bootstrap(
    values: Vec<f64>,
    alpha: f64,
    m_bootstrap: usize,
    seed: u64,
    stream: u64,
) -> PyResult<PyEstimate> {
    let s = sample_set(values)?;
    let mut rng = RngStream::new(seed, stream);
    bounds::apub_bootstrap(&s, alpha, m_bootstrap, &mut rng)
        .map(Into::into)
        .map_err(value_err)
}

/// Percentile bootstrap upper bound (the (1-alpha)-quantile of resampled
/// means).
#[pyfunction]
#[pyo3(signature = (values, alpha, m_bootstrap, seed=0, stream=0))]
fn efron_bootstrap(
    values: Vec<f64>,
    alpha: f64,
    m_bootstrap: usize,
    seed: u64,
    stream: u64,
) -> PyResult<f64> {
    let s = sample_set(values)?;
    let mut rng = RngStream::new(seed, stream);
    bounds::efron_bootstrap(&s, alpha, m_bootstrap, &mut rng).map_err(value_err)
}

/// Classical large-sample bound `mean + z_{1-alpha} std / sqrt(N)`.
#[pyfunction]
fn normal_ucb(values: Vec<f64>, alpha: f64) -> PyResult<f64> {
    let s = sample_set(values)?;
    bounds::normal_ucb(&s, alpha).map_err(value_err)
}

/// Standard normal quantile, |error| <= 1e-8.
#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    bounds::normal_quantile(p).map_err(value_err)
}

/// One multinomial(n, 1/n) bootstrap weight vector.
#[pyfunction]
#[pyo3(signature = (n, seed=0, stream=0))]
fn draw_bootstrap_weights(n: usize, seed: u64, stream: u64) -> PyResult<Vec<u32>> {
    if n == 0 {
        return Err(PyValueError::new_err("n must be positive"));
    }
    let mut rng = RngStream::new(seed, stream);
    Ok(sampling::draw_bootstrap_weights(n, &mut rng)
        .counts()
        .to_vec())
}

/// Gamma(shape, scale) draws.
#[pyfunction]
#[pyo3(signature = (shape, scale, size, seed=0, stream=0))]
fn sample_gamma(shape: f64, scale: f64, size: usize, seed: u64, stream: u64) -> PyResult<Vec<f64>> {
    if !(shape > 0.0 && scale > 0.0) {
        return Err(PyValueError::new_err("shape and scale must be positive"));
    }
    let mut rng = RngStream::new(seed, stream);
    Ok((0..size)
        .map(|_| sampling::sample_gamma(shape, scale, &mut rng))
        .collect())
}

/// Gumbel-copula draws in (0,1)^dim with dependence `lam >= 1`.
#[pyfunction]
#[pyo3(signature = (dim, lam, size, seed=0, stream=0))]
fn sample_gumbel_copula(
    dim: usize,
    lam: f64,
    size: usize,
    seed: u64,
    stream: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let mut rng = RngStream::new(seed, stream);
    (0..size)
        .map(|_| sampling::sample_gumbel_copula(dim, lam, &mut rng).map_err(value_err))
        .collect()
}

fn solve_weights(problem: &TwoStageProblem, m: usize, seed: u64) -> Vec<sampling::BootstrapWeights> {
    let mut rng = sampling::derive_substream(seed, 0);
    (0..m)
        .map(|_| sampling::draw_bootstrap_weights(problem.n_scenarios(), &mut rng))
        .collect()
}

/// Decomposition solve of a two-stage problem given as JSON. Weight draws
/// come from substream `(seed, 0)`, matching the CLI.
#[pyfunction]
#[pyo3(signature = (problem_json, alpha, m_bootstrap, seed=0))]
fn solve_lshaped(
    problem_json: &str,
    alpha: f64,
    m_bootstrap: usize,
    seed: u64,
) -> PyResult<PySolveResult> {
    let problem = TwoStageProblem::from_json(problem_json).map_err(value_err)?;
    let weights = solve_weights(&problem, m_bootstrap, seed);
    let out = lshaped::solve_apub_lshaped(&problem, alpha, &weights, &LShapedConfig::default())
        .map_err(value_err)?;
    Ok(PySolveResult {
        value: out.value,
        x: out.x,
        iterations: out.log.iterations,
        feasibility_cuts: out.log.feasibility_cuts,
        optimality_cuts: out.log.optimality_cuts,
    })
}

/// Extensive-form LP solve of the same model; same weight derivation as
/// `solve_lshaped`, so the two routes agree on identical seeds.
#[pyfunction]
#[pyo3(signature = (problem_json, alpha, m_bootstrap, seed=0))]
fn solve_extensive(
    problem_json: &str,
    alpha: f64,
    m_bootstrap: usize,
    seed: u64,
) -> PyResult<PySolveResult> {
    let problem = TwoStageProblem::from_json(problem_json).map_err(value_err)?;
    let weights = solve_weights(&problem, m_bootstrap, seed);
    let lp = build_extensive_form(&problem, alpha, &weights).map_err(value_err)?;
    let sol = solve_lp(&lp).map_err(value_err)?;
    match sol.status {
        LpStatus::Optimal => Ok(PySolveResult {
            value: sol.objective_value,
            x: sol.primal[..problem.first_stage_dim()].to_vec(),
            iterations: 0,
            feasibility_cuts: 0,
            optimality_cuts: 0,
        }),
        LpStatus::Infeasible => Err(PyValueError::new_err("extensive LP is infeasible")),
        LpStatus::Unbounded => Err(PyValueError::new_err("extensive LP is unbounded")),
    }
}

/// JSON text of a day-ahead charging instance with `n_train` sampled
/// scenarios, handy for quick experiments.
#[pyfunction]
#[pyo3(signature = (n_train, seed=0))]
fn ev_problem_json(n_train: usize, seed: u64) -> PyResult<String> {
    if n_train == 0 {
        return Err(PyValueError::new_err("n_train must be positive"));
    }
    let instance = apub::experiments::make_ev_instance();
    let mut rng = sampling::derive_substream(seed, 0);
    let scenarios = (0..n_train)
        .map(|_| instance.sample_scenario(&mut rng))
        .collect();
    Ok(instance.problem(scenarios, seed).to_json())
}

#[pymodule]
fn apub_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEstimate>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(cvar_of_samples, m)?)?;
    m.add_function(wrap_pyfunction!(var_of_samples, m)?)?;
    m.add_function(wrap_pyfunction!(multinomial_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(apub_exact, m)?)?;
    m.add_function(wrap_pyfunction!(apub_bootstrap, m)?)?;
    m.add_function(wrap_pyfunction!(efron_bootstrap, m)?)?;
    m.add_function(wrap_pyfunction!(normal_ucb, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(draw_bootstrap_weights, m)?)?;
    m.add_function(wrap_pyfunction!(sample_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(sample_gumbel_copula, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lshaped, m)?)?;
    m.add_function(wrap_pyfunction!(solve_extensive, m)?)?;
    m.add_function(wrap_pyfunction!(ev_problem_json, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
