//! Python bindings: symbols, measures, sweeps, the solver and the runner.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use zklab::config::ExperimentConfig;
use zklab::harness::counterexample;
use zklab::harness::estimates::{EnsembleSpec, EstimateId, EstimateParams, EvalOptions};
use zklab::harness::sweep::scaling_sweep;
use zklab::measure::{self, Constants, MeasureQuery};
use zklab::projectors::{self, Dyadic};
use zklab::solver::{bump_data, gzk_solve, EvolutionConfig};
use zklab::{exact, runner, symbols, FrequencyPoint, Grid, ZkError};

create_exception!(zklab_py, ZkLabError, PyException, "Degenerate input or a runtime failure inside zklab.");

fn to_py(e: ZkError) -> PyErr {
    match e {
        ZkError::Config { .. } | ZkError::Contract(_) | ZkError::SingularWeight { .. } => PyValueError::new_err(e.to_string()),
        ZkError::Io(_) => PyOSError::new_err(e.to_string()),
        _ => ZkLabError::new_err(e.to_string()),
    }
}

fn dyadic(n: u64) -> PyResult<Dyadic> {
    Dyadic::new(n).map_err(to_py)
}

/// Dispersion symbol xi (xi^2 + q^2).
#[pyfunction]
fn phase(xi: f64, q: i64) -> f64 {
    symbols::phase(FrequencyPoint::new(xi, q))
}

/// (3 xi^2 + q^2)^(1/2).
#[pyfunction]
fn dilated_norm(xi: f64, q: i64) -> f64 {
    symbols::dilated_norm(FrequencyPoint::new(xi, q))
}

/// Littlewood-Paley multiplier of shell `n` at dilated norm `r`.
#[pyfunction]
fn shell_weight(n: u64, r: f64) -> PyResult<f64> {
    Ok(projectors::shell_weight(dyadic(n)?, r))
}

#[pyfunction]
#[pyo3(signature = (samples = 1000, seed = 0))]
fn check_identities(py: Python<'_>, samples: usize, seed: u64) -> PyResult<Bound<'_, PyDict>> {
    let r = py.detach(|| exact::check_identities(samples, seed));
    let d = PyDict::new(py);
    d.set_item("samples", r.samples)?;
    d.set_item("substitution_max_defect", r.substitution_max_defect)?;
    d.set_item("factored_max_defect", r.factored_max_defect)?;
    d.set_item("rewritten_max_defect", r.rewritten_max_defect)?;
    d.set_item("exact", r.all_exact())?;
    Ok(d)
}

#[allow(clippy::too_many_arguments)]
fn query(xi: f64, q: i64, c: f64, k: f64, n1: u64, n2: u64, h: f64, alpha: Option<f64>) -> PyResult<MeasureQuery> {
    let mq = MeasureQuery { tau: 0.0, xi, q, h, n1: dyadic(n1)?, n2: dyadic(n2)?, c, k, alpha, constants: Constants::default() };
    mq.validate().map_err(to_py)?;
    Ok(mq)
}

/// Closed-form measure of the level set {c <= p <= c + K} inside both balls.
#[pyfunction]
#[pyo3(signature = (xi, q, c, K, n1, n2, h = 0.0, alpha = None))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn measure_b(xi: f64, q: i64, c: f64, K: f64, n1: u64, n2: u64, h: f64, alpha: Option<f64>) -> PyResult<f64> {
    measure::measure_b(&query(xi, q, c, K, n1, n2, h, alpha)?).map_err(to_py)
}

/// Monte-Carlo estimate of the same measure: (value, standard error).
#[pyfunction]
#[pyo3(signature = (xi, q, c, K, n1, n2, h = 0.0, alpha = None, samples = 100_000, seed = 0))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn mc_measure(xi: f64, q: i64, c: f64, K: f64, n1: u64, n2: u64, h: f64, alpha: Option<f64>, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    measure::mc_oracle_measure(&query(xi, q, c, K, n1, n2, h, alpha)?, samples, seed).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n, s, b = 0.55))]
fn counterexample_norms(py: Python<'_>, n: i64, s: f64, b: f64) -> PyResult<Bound<'_, PyDict>> {
    let r = counterexample::counterexample_norms(n, s, b, false).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("N", r.n)?;
    d.set_item("xsb", r.xsb)?;
    d.set_item("l4_sq", r.l4_sq)?;
    Ok(d)
}

/// Max-quotient sweep of one estimate over dyadic shells `ns`.
#[pyfunction]
#[pyo3(signature = (estimate, ns, samples = 20, seed = 0, eps = 0.05, b = 0.55, s = None, p = None, alpha = None, k = None))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    estimate: &str,
    ns: Vec<u64>,
    samples: usize,
    seed: u64,
    eps: f64,
    b: f64,
    s: Option<f64>,
    p: Option<f64>,
    alpha: Option<f64>,
    k: Option<u32>,
) -> PyResult<Bound<'py, PyDict>> {
    let id: EstimateId = estimate.parse().map_err(to_py)?;
    let shells = ns.into_iter().map(dyadic).collect::<PyResult<Vec<_>>>()?;
    let params = EstimateParams { eps, b, s, p, alpha, k, ..Default::default() };
    let r = py
        .detach(|| scaling_sweep(id, &params, &EnsembleSpec::default(), &shells, samples, seed, &EvalOptions::default()))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("estimate", id.name())?;
    d.set_item("slope", r.fit.slope)?;
    d.set_item("slope_ci", r.fit.slope_ci)?;
    d.set_item("max_quotient", r.max_quotient)?;
    let rows: Vec<(u64, f64, f64, usize)> = r.shells.iter().map(|s| (s.n, s.max, s.median, s.valid)).collect();
    d.set_item("shells", rows)?;
    Ok(d)
}

/// Evolves the standard bump and returns the conserved-quantity history.
/// `grid` is (Nx, Ny, Lx); the default grid is used when omitted.
#[pyfunction]
#[pyo3(signature = (k = 1, sign = 1, dt = 1e-3, T = 1.0, amplitude = 0.5, stride = 10, grid = None))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    k: u32,
    sign: i8,
    dt: f64,
    T: f64,
    amplitude: f64,
    stride: usize,
    grid: Option<(usize, usize, f64)>,
) -> PyResult<Bound<'_, PyDict>> {
    let g = match grid {
        Some((nx, ny, lx)) => Grid { nx, ny, lx, ..Grid::default() },
        None => Grid::default(),
    };
    g.validate().map_err(to_py)?;
    let mut cfg = EvolutionConfig::new(k, sign, dt, T);
    cfg.sample_stride = stride;
    let tr = py.detach(|| gzk_solve(&bump_data(g, amplitude), &cfg)).map_err(to_py)?;
    let c = &tr.conserved;
    let d = PyDict::new(py);
    d.set_item("times", c.times.clone())?;
    d.set_item("mass", c.mass.clone())?;
    d.set_item("energy", c.energy.clone())?;
    d.set_item("mass_drift", c.mass_drift())?;
    d.set_item("energy_drift", c.energy_drift())?;
    Ok(d)
}

/// Runs an experiment config (TOML or JSON text) into `out`; returns the
/// manifest as JSON.
#[pyfunction]
fn run(py: Python<'_>, config: &str, out: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::parse(config).map_err(to_py)?;
    let outcome = py.detach(|| runner::run(&cfg, std::path::Path::new(out))).map_err(to_py)?;
    serde_json::to_string(&outcome.manifest).map_err(|e| ZkLabError::new_err(e.to_string()))
}

#[pymodule]
fn zklab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("ZkLabError", m.py().get_type::<ZkLabError>())?;
    m.add("ESTIMATES", EstimateId::ALL.iter().map(|e| e.name()).collect::<Vec<_>>())?;
    m.add_function(wrap_pyfunction!(phase, m)?)?;
    m.add_function(wrap_pyfunction!(dilated_norm, m)?)?;
    m.add_function(wrap_pyfunction!(shell_weight, m)?)?;
    m.add_function(wrap_pyfunction!(check_identities, m)?)?;
    m.add_function(wrap_pyfunction!(measure_b, m)?)?;
    m.add_function(wrap_pyfunction!(mc_measure, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_norms, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
