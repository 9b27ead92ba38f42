//! Python bindings for the `irsopt` toolkit.
//!
//! Matrices cross the boundary as lists of rows of Python `complex`
//! values; vectors as flat lists.

use irsopt::harness::{self, Experiment, ScenarioConfig};
use irsopt::linalg::{ComplexMatrix, ComplexVector};
use irsopt::reflection::{self, IrsLink, ReflectionPattern};
use irsopt::slot_opt::{self, AoOptions, ReflectionSolver, SlotProblem};
use irsopt::two_timescale::{self, SlotScheme};
use irsopt::{geometry_channel, ucmo, Error};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_)
        | Error::Dimension(_)
        | Error::Config(_)
        | Error::RankDeficient(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("matrix rows differ in length"));
    }
    Ok(ComplexMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn rows_of(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vector(v: Vec<Complex64>) -> ComplexVector {
    ComplexVector::from_vec(v)
}

/// Scenario configuration of the experiment harness.
#[pyclass(name = "ScenarioConfig", from_py_object)]
#[derive(Clone)]
struct PyScenarioConfig {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenarioConfig {
    #[new]
    fn new() -> Self {
        Self {
            inner: ScenarioConfig::default(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ScenarioConfig::from_toml_str(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn trials(&self) -> usize {
        self.inner.trials
    }

    #[setter]
    fn set_trials(&mut self, trials: usize) {
        self.inner.trials = trials;
    }

    fn to_json(&self) -> String {
        self.inner.canonical_json()
    }

    fn sha256(&self) -> String {
        self.inner.sha256()
    }

    fn __repr__(&self) -> String {
        format!(
            "ScenarioConfig(seed={}, trials={})",
            self.inner.seed, self.inner.trials
        )
    }
}

/// One aggregated row of an experiment.
#[pyclass(name = "ResultRow", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyResultRow {
    sweep_var: String,
    value: f64,
    scheme: String,
    mean: f64,
    stderr: f64,
    trials: usize,
}

#[pyclass(name = "ExperimentResult", get_all, skip_from_py_object)]
struct PyExperimentResult {
    experiment: String,
    seed: u64,
    config_sha256: String,
    rows: Vec<PyResultRow>,
    violations: Vec<String>,
    warnings: Vec<String>,
    csv: String,
}

/// Runs `sumrate`, `rank`, `aasr` or `ao-trace` on a pool of `threads`
/// workers (0 picks one per core).
#[pyfunction]
#[pyo3(signature = (name, config, threads = 0))]
fn run_experiment(
    py: Python<'_>,
    name: &str,
    config: &PyScenarioConfig,
    threads: usize,
) -> PyResult<PyExperimentResult> {
    let experiment = Experiment::ALL
        .into_iter()
        .find(|e| e.name() == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown experiment {name:?}")))?;
    let pool = rayon_pool(threads)?;
    let cfg = config.inner.clone();
    let result = py
        .detach(|| pool.install(|| experiment.run(&cfg)))
        .map_err(to_py)?;
    Ok(PyExperimentResult {
        experiment: result.metadata.experiment.clone(),
        seed: result.metadata.seed,
        config_sha256: result.metadata.config_sha256.clone(),
        rows: result
            .rows
            .iter()
            .map(|r| PyResultRow {
                sweep_var: r.sweep_var.clone(),
                value: r.value,
                scheme: r.scheme.clone(),
                mean: r.mean,
                stderr: r.stderr,
                trials: r.trials,
            })
            .collect(),
        csv: result.to_csv(),
        violations: result.violations,
        warnings: result.warnings,
    })
}

fn rayon_pool(threads: usize) -> PyResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
fn dbm_to_watts(dbm: f64) -> f64 {
    harness::dbm_to_watts(dbm)
}

#[pyfunction]
fn bessel_j0(x: f64) -> f64 {
    geometry_channel::bessel_j0(x)
}

#[pyfunction]
fn jakes_correlation(doppler_hz: f64, delay_s: f64) -> PyResult<f64> {
    geometry_channel::jakes_correlation(doppler_hz, delay_s).map_err(to_py)
}

/// Reflection phases that co-phase every element.
#[pyfunction]
fn optimal_pattern(incident: Vec<f64>, departure: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(reflection::optimal_pattern(&incident, &departure)
        .map_err(to_py)?
        .phases()
        .to_vec())
}

#[pyfunction]
fn array_gain(phases: Vec<f64>, incident: Vec<f64>, departure: Vec<f64>) -> PyResult<f64> {
    reflection::array_gain(&ReflectionPattern::new(phases), &incident, &departure).map_err(to_py)
}

#[pyfunction]
fn quantize(phases: Vec<f64>, bits: u32) -> PyResult<Vec<f64>> {
    Ok(reflection::quantize(&ReflectionPattern::new(phases), bits)
        .map_err(to_py)?
        .phases()
        .to_vec())
}

/// Normalized eigenvalues of `H H^H`, descending.
#[pyfunction]
fn dof_spectrum(effective: Vec<Vec<Complex64>>) -> PyResult<Vec<f64>> {
    reflection::dof_spectrum(&matrix(effective)?).map_err(to_py)
}

#[pyfunction]
fn water_filling(noise_factors: Vec<f64>, noise: f64, power: f64) -> PyResult<Vec<f64>> {
    two_timescale::water_filling(&noise_factors, noise, power).map_err(to_py)
}

#[pyfunction]
fn flops_f1(antennas: u64, users: u64, elements: u64, streams: u64) -> u64 {
    two_timescale::flops_f1(antennas, users, elements, streams)
}

/// Sum-rate of one slot for scheme `svd_zf`, `outdated_svd` or
/// `upper_bound`, given outdated and current effective channels.
#[pyfunction]
#[pyo3(signature = (outdated, current, streams, power, noise = 1.0, scheme = "svd_zf"))]
fn slot_rate(
    outdated: Vec<Vec<Complex64>>,
    current: Vec<Vec<Complex64>>,
    streams: usize,
    power: f64,
    noise: f64,
    scheme: &str,
) -> PyResult<f64> {
    let scheme = SlotScheme::ALL
        .into_iter()
        .find(|s| s.name() == scheme)
        .ok_or_else(|| PyValueError::new_err(format!("unknown scheme {scheme:?}")))?;
    let out = two_timescale::slot_rate(
        &matrix(outdated)?,
        &matrix(current)?,
        streams,
        noise,
        power,
        scheme,
    )
    .map_err(to_py)?;
    Ok(out.rate)
}

/// `-theta^H A theta + 2 Re(theta^H b)`.
#[pyfunction]
fn quadratic_objective(
    a: Vec<Vec<Complex64>>,
    b: Vec<Complex64>,
    theta: Vec<Complex64>,
) -> PyResult<f64> {
    Ok(ucmo::objective(&matrix(a)?, &vector(b), &vector(theta)))
}

#[pyfunction]
fn euclidean_gradient(
    a: Vec<Vec<Complex64>>,
    b: Vec<Complex64>,
    theta: Vec<Complex64>,
) -> PyResult<Vec<Complex64>> {
    Ok(
        ucmo::euclidean_gradient(&matrix(a)?, &vector(b), &vector(theta))
            .iter()
            .copied()
            .collect(),
    )
}

/// Maximizes the unit-modulus quadratic by manifold gradient ascent from
/// the phases of `b` and `restarts` seeded random points, keeping the best.
/// Returns `(theta, objective)`.
#[pyfunction]
#[pyo3(signature = (a, b, restarts = 7))]
fn solve_ucmo(
    a: Vec<Vec<Complex64>>,
    b: Vec<Complex64>,
    restarts: usize,
) -> PyResult<(Vec<Complex64>, f64)> {
    let r = ucmo::run_ucmo_multistart(
        &matrix(a)?,
        &vector(b),
        restarts,
        &ucmo::UcmoConfig::default(),
    )
    .map_err(to_py)?;
    Ok((r.point.value().iter().copied().collect(), r.objective))
}

/// Maximizes the unit-modulus quadratic with the per-coordinate
/// multiplier iteration, retrying from up to `restarts` random points while
/// no start is certified. Returns `(theta, objective)`.
#[pyfunction]
#[pyo3(signature = (a, b, restarts = 7))]
fn solve_dual(
    a: Vec<Vec<Complex64>>,
    b: Vec<Complex64>,
    restarts: usize,
) -> PyResult<(Vec<Complex64>, f64)> {
    let (a, b) = (matrix(a)?, vector(b));
    let opts = slot_opt::DualOptions {
        restarts,
        ..Default::default()
    };
    let theta = match slot_opt::solve_reflection_dual(&a, &b, &opts) {
        Ok(s) => s.theta,
        Err(Error::NoConvergence { last, .. }) => last,
        Err(e) => return Err(to_py(e)),
    };
    let f = ucmo::objective(&a, &b, &theta);
    Ok((theta.iter().copied().collect(), f))
}

/// Outcome of alternating optimization on one slot.
#[pyclass(name = "AoResult", get_all, skip_from_py_object)]
struct PyAoResult {
    sum_rate: f64,
    trace: Vec<f64>,
    theta: Vec<Complex64>,
    precoder: Vec<Vec<Complex64>>,
}

/// Weighted sum-rate maximization of one slot.
///
/// `links` is a list of `(G, H)` pairs, `G` being `N_t x N` and `H`
/// `N x K`. `solver` is `dual`, `ucmo` or `fixed`.
#[pyfunction]
#[pyo3(signature = (links, power, direct = None, noise = 1.0, solver = "dual", max_iters = 200, tol = 1e-6))]
#[allow(clippy::too_many_arguments)]
fn run_ao(
    py: Python<'_>,
    links: Vec<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)>,
    power: f64,
    direct: Option<Vec<Vec<Complex64>>>,
    noise: f64,
    solver: &str,
    max_iters: usize,
    tol: f64,
) -> PyResult<PyAoResult> {
    let solver = match solver {
        "dual" => ReflectionSolver::Dual,
        "ucmo" => ReflectionSolver::Ucmo,
        "fixed" => ReflectionSolver::Fixed,
        other => return Err(PyValueError::new_err(format!("unknown solver {other:?}"))),
    };
    let links = links
        .into_iter()
        .map(|(g, h)| IrsLink::new(matrix(g)?, matrix(h)?).map_err(to_py))
        .collect::<PyResult<Vec<_>>>()?;
    let direct = direct.map(matrix).transpose()?;
    let problem = SlotProblem::unweighted(links, direct, noise, power).map_err(to_py)?;
    let opts = AoOptions {
        tol,
        max_iters,
        ..AoOptions::new(solver)
    };
    let state = py
        .detach(|| slot_opt::run_ao(&problem, slot_opt::initial_state(&problem, None)?, &opts))
        .map_err(to_py)?;
    Ok(PyAoResult {
        sum_rate: state.sum_rate(),
        trace: state.objective_trace.clone(),
        theta: state.theta.iter().copied().collect(),
        precoder: rows_of(&state.w),
    })
}

#[pymodule]
fn pyirsopt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenarioConfig>()?;
    m.add_class::<PyResultRow>()?;
    m.add_class::<PyExperimentResult>()?;
    m.add_class::<PyAoResult>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_to_watts, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j0, m)?)?;
    m.add_function(wrap_pyfunction!(jakes_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(array_gain, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(dof_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(water_filling, m)?)?;
    m.add_function(wrap_pyfunction!(flops_f1, m)?)?;
    m.add_function(wrap_pyfunction!(slot_rate, m)?)?;
    m.add_function(wrap_pyfunction!(quadratic_objective, m)?)?;
    m.add_function(wrap_pyfunction!(euclidean_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ucmo, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dual, m)?)?;
    m.add_function(wrap_pyfunction!(run_ao, m)?)?;
    Ok(())
}
