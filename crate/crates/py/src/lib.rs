//! Python module `fraclab`: constants, pointwise helpers and the batch driver.
//!
//! Structured results cross the boundary as JSON and are decoded with the
//! standard `json` module, so the Python side sees plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fraclab_cli::{CliError, RunConfig};
use fraclab_core::onedim;
use fraclab_core::special;
use fraclab_core::{ConstantBundle, Domain, FracError, FracParams};

fn frac_err(e: FracError) -> PyErr {
    cli_err(CliError::from(e))
}

fn cli_err(e: CliError) -> PyErr {
    match e.code {
        2 => PyValueError::new_err(e.message),
        _ => PyRuntimeError::new_err(e.message),
    }
}

fn decode<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn params(dim: usize, p: f64, s: f64) -> PyResult<FracParams> {
    FracParams::new(dim, p, s).map_err(frac_err)
}

/// Every closed-form constant for (N, p, s) as a dict; undefined ones are None.
#[pyfunction]
#[pyo3(signature = (n, p, s))]
fn constants<'py>(py: Python<'py>, n: usize, p: f64, s: f64) -> PyResult<Bound<'py, PyAny>> {
    let bundle = ConstantBundle::new(&params(n, p, s)?).map_err(frac_err)?;
    decode(py, &serde_json::to_string(&bundle).expect("bundle serializes"))
}

/// Sharp constant of the fractional Hardy inequality on a half-space (ps > 1).
#[pyfunction]
#[pyo3(signature = (n, p, s))]
fn hardy_constant(n: usize, p: f64, s: f64) -> PyResult<f64> {
    special::hardy_constant(&params(n, p, s)?).map_err(frac_err)
}

/// Remainder potential W_{p,s}(x) on (0, 1).
#[pyfunction]
fn remainder_potential_w(x: f64, p: f64, s: f64) -> PyResult<f64> {
    onedim::remainder_potential_w(x, p, s).map_err(frac_err)
}

/// m_α(x) in a domain given as a JSON object (same schema as the config file).
#[pyfunction]
#[pyo3(signature = (domain, x, alpha, angular_nodes = 256))]
fn pseudodistance(domain: &str, x: Vec<f64>, alpha: f64, angular_nodes: usize) -> PyResult<f64> {
    let dom: Domain = serde_json::from_str(domain).map_err(|e| PyValueError::new_err(format!("invalid domain: {e}")))?;
    dom.validate().map_err(frac_err)?;
    if x.len() != dom.dim() {
        return Err(PyValueError::new_err(format!("point has {} coordinates, domain has {}", x.len(), dom.dim())));
    }
    dom.pseudodistance(&x, alpha, angular_nodes).map_err(frac_err)
}

/// Runs one command from a JSON config; returns the report envelope as a dict.
///
/// Contract violations are reported through the envelope's `passed` field,
/// not raised.
#[pyfunction]
fn run_config<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg: RunConfig = serde_json::from_str(config).map_err(|e| PyValueError::new_err(format!("invalid config: {e}")))?;
    if cfg.command.is_none() {
        return Err(PyValueError::new_err("config must name a command"));
    }
    cfg.validate().map_err(cli_err)?;
    let rendered = py.detach(|| fraclab_cli::commands::execute(&cfg)).map_err(cli_err)?;
    decode(py, &rendered.json)
}

#[pymodule]
#[pyo3(name = "fraclab")]
fn fraclab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_constant, m)?)?;
    m.add_function(wrap_pyfunction!(remainder_potential_w, m)?)?;
    m.add_function(wrap_pyfunction!(pseudodistance, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
