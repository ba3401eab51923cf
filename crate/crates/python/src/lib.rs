//! Python bindings. Reports come back as plain dicts, big integers as
//! Python ints.

use gasketpile::{group, io, markov, render, sandpile, selfsim, spectral};
use gasketpile::{BoundaryCondition, Corner};
use num_bigint::BigInt;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;

fn err(e: gasketpile::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON and loads with Python's `json` module.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn parse_boundary(s: &str) -> PyResult<BoundaryCondition> {
    s.parse().map_err(err)
}

#[pyclass(name = "GasketGraph", module = "pygasketpile", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGasketGraph {
    inner: gasketpile::GasketGraph,
}

#[pymethods]
impl PyGasketGraph {
    #[new]
    #[pyo3(signature = (level, boundary = "normal"))]
    fn new(level: u32, boundary: &str) -> PyResult<Self> {
        Ok(Self {
            inner: gasketpile::GasketGraph::new(level, parse_boundary(boundary)?),
        })
    }

    #[getter]
    fn level(&self) -> u32 {
        self.inner.level()
    }

    #[getter]
    fn boundary(&self) -> String {
        self.inner.boundary().to_string()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn vertices(&self) -> Vec<(u32, u32)> {
        self.inner.vertices().iter().map(|c| (c.a, c.b)).collect()
    }

    fn degrees(&self) -> Vec<u32> {
        self.inner.degrees().to_vec()
    }

    fn betas(&self) -> Vec<u32> {
        self.inner.betas().to_vec()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges()
    }

    fn to_json(&self) -> PyResult<String> {
        io::graph_to_json(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("GasketGraph(level={}, boundary='{}')", self.inner.level(), self.inner.boundary())
    }
}

#[pyclass(name = "Configuration", module = "pygasketpile", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyConfiguration {
    inner: gasketpile::Configuration,
}

impl PyConfiguration {
    fn graph_inner(&self) -> gasketpile::GasketGraph {
        gasketpile::GasketGraph::new(self.inner.level(), self.inner.boundary())
    }
}

fn wrap(inner: gasketpile::Configuration) -> PyConfiguration {
    PyConfiguration { inner }
}

#[pymethods]
impl PyConfiguration {
    #[new]
    fn new(graph: &PyGasketGraph, chips: Vec<u64>) -> PyResult<Self> {
        Ok(wrap(gasketpile::Configuration::new(&graph.inner, chips).map_err(err)?))
    }

    /// Parses JSON or the compact `level boundary c0 c1 ...` form.
    #[staticmethod]
    fn parse(s: &str) -> PyResult<Self> {
        Ok(wrap(io::parse_config(s).map_err(err)?))
    }

    #[getter]
    fn chips(&self) -> Vec<u64> {
        self.inner.chips().to_vec()
    }

    #[getter]
    fn level(&self) -> u32 {
        self.inner.level()
    }

    #[getter]
    fn boundary(&self) -> String {
        self.inner.boundary().to_string()
    }

    fn graph(&self) -> PyGasketGraph {
        PyGasketGraph {
            inner: self.graph_inner(),
        }
    }

    fn is_stable(&self) -> bool {
        self.inner.is_stable(&self.graph_inner())
    }

    fn to_json(&self) -> PyResult<String> {
        io::config_to_json(&self.inner).map_err(err)
    }

    fn to_compact(&self) -> String {
        io::config_to_compact(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Configuration('{}')", io::config_to_compact(&self.inner))
    }
}

/// Returns the stable configuration and the odometer.
#[pyfunction]
#[pyo3(signature = (config, frozen = Vec::new()))]
fn stabilize(config: &PyConfiguration, frozen: Vec<usize>) -> PyResult<(PyConfiguration, Vec<u64>)> {
    let (out, odo) = sandpile::stabilize(&config.graph_inner(), &config.inner, &frozen).map_err(err)?;
    Ok((wrap(out), odo.fires))
}

#[pyfunction]
fn oplus(a: &PyConfiguration, b: &PyConfiguration) -> PyResult<PyConfiguration> {
    Ok(wrap(sandpile::oplus(&a.graph_inner(), &a.inner, &b.inner).map_err(err)?))
}

#[pyfunction]
fn identity(graph: &PyGasketGraph) -> PyResult<PyConfiguration> {
    Ok(wrap(sandpile::identity(&graph.inner).map_err(err)?))
}

#[pyfunction]
fn is_recurrent(config: &PyConfiguration) -> PyResult<bool> {
    sandpile::is_recurrent(&config.graph_inner(), &config.inner).map_err(err)
}

/// Recurrent representative of the class of an integer vector.
#[pyfunction]
fn recurrent_rep(graph: &PyGasketGraph, x: Vec<BigInt>) -> PyResult<PyConfiguration> {
    let v = sandpile::IntegerClassVector { entries: x };
    Ok(wrap(sandpile::recurrent_rep(&graph.inner, &v).map_err(err)?))
}

#[pyfunction]
fn build_m(level: u32, x: u64, y: u64, z: u64) -> PyResult<PyConfiguration> {
    Ok(wrap(selfsim::build_m(level, x, y, z).map_err(err)?.config))
}

#[pyfunction]
fn build_identity_theorem(level: u32) -> PyResult<PyConfiguration> {
    Ok(wrap(selfsim::build_identity_theorem(level).map_err(err)?))
}

/// `check` is one of `doubling`, `transport`, `junction`; `config` defaults
/// as in the command-line tool.
#[pyfunction]
#[pyo3(signature = (check, level, config = None))]
fn verify<'py>(
    py: Python<'py>,
    check: &str,
    level: u32,
    config: Option<&PyConfiguration>,
) -> PyResult<Bound<'py, PyAny>> {
    let eta = config.map(|c| c.inner.clone());
    match check {
        "doubling" => to_py(py, &selfsim::verify_doubling(level).map_err(err)?),
        "transport" => {
            let eta = match eta {
                Some(c) => c,
                None => sandpile::identity(&gasketpile::GasketGraph::new(
                    level,
                    BoundaryCondition::CornerSink(Corner::LowerLeft),
                ))
                .map_err(err)?,
            };
            to_py(py, &selfsim::verify_corner_transport(level, &eta).map_err(err)?)
        }
        "junction" => {
            let eta = match eta {
                Some(c) => c,
                None => selfsim::build_m(level, 2, 2, 2).map_err(err)?.config,
            };
            to_py(py, &selfsim::verify_junction_invariance(level, &eta).map_err(err)?)
        }
        other => Err(PyValueError::new_err(format!("unknown check `{other}`"))),
    }
}

#[pyfunction]
fn invariant_factors(graph: &PyGasketGraph) -> Vec<BigInt> {
    group::sandpile_group(&graph.inner).factors().to_vec()
}

#[pyfunction]
fn group_order(graph: &PyGasketGraph) -> PyResult<BigInt> {
    group::group_order(&graph.inner).map_err(err)
}

#[pyfunction]
fn tau_recursion(level: u32) -> BigInt {
    group::tau_recursion(level)
}

#[pyfunction]
fn tau_matrix_tree(level: u32) -> PyResult<BigInt> {
    group::tau_matrix_tree(level).map_err(err)
}

#[pyfunction]
fn check_group_theorem(py: Python<'_>, level: u32) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &group::check_group_theorem(level).map_err(err)?)
}

/// Eigenvalue of the `index`-th cell character as `(numerator, denominator)`.
#[pyfunction]
fn h1_eigenvalue(level: u32, index: usize) -> PyResult<(BigInt, BigInt)> {
    let g = gasketpile::GasketGraph::normal(level);
    let h = spectral::embed_h1(level, index).map_err(err)?;
    let e = spectral::eigenvalue(&g, &h).map_err(err)?;
    let r = e.exact.expect("cell characters take values +-1");
    Ok((r.numer().clone(), r.denom().clone()))
}

#[pyfunction]
fn exact_distance(py: Python<'_>, level: u32, t: u64) -> PyResult<Bound<'_, PyAny>> {
    let g = gasketpile::GasketGraph::normal(level);
    to_py(py, &spectral::exact_distance(&g, t, spectral::CHARACTER_CAP).map_err(err)?)
}

#[pyfunction]
fn distinguishing_statistic(config: &PyConfiguration) -> PyResult<f64> {
    spectral::distinguishing_statistic(config.inner.level(), &config.inner).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (level, steps, seed = 0, trials = 1))]
fn simulate(py: Python<'_>, level: u32, steps: u64, seed: u64, trials: usize) -> PyResult<Bound<'_, PyAny>> {
    let s = py
        .detach(|| markov::simulate(level, steps, seed, trials))
        .map_err(err)?;
    to_py(py, &s)
}

#[pyfunction]
fn sample_stationary(graph: &PyGasketGraph, seed: u64) -> PyResult<PyConfiguration> {
    Ok(wrap(markov::sample_stationary(&graph.inner, seed).map_err(err)?))
}

#[pyfunction]
fn mixing_report(py: Python<'_>, level: u32) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &markov::mixing_report(level, None).map_err(err)?)
}

/// Writes a PPM or SVG picture, chosen by the file extension.
#[pyfunction]
#[pyo3(signature = (config, path, scale = 16))]
fn render_to(config: &PyConfiguration, path: std::path::PathBuf, scale: u32) -> PyResult<()> {
    render::write_render(&path, &config.graph_inner(), &config.inner, scale).map_err(err)
}

#[pymodule]
fn pygasketpile(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGasketGraph>()?;
    m.add_class::<PyConfiguration>()?;
    m.add_function(wrap_pyfunction!(stabilize, m)?)?;
    m.add_function(wrap_pyfunction!(oplus, m)?)?;
    m.add_function(wrap_pyfunction!(identity, m)?)?;
    m.add_function(wrap_pyfunction!(is_recurrent, m)?)?;
    m.add_function(wrap_pyfunction!(recurrent_rep, m)?)?;
    m.add_function(wrap_pyfunction!(build_m, m)?)?;
    m.add_function(wrap_pyfunction!(build_identity_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_factors, m)?)?;
    m.add_function(wrap_pyfunction!(group_order, m)?)?;
    m.add_function(wrap_pyfunction!(tau_recursion, m)?)?;
    m.add_function(wrap_pyfunction!(tau_matrix_tree, m)?)?;
    m.add_function(wrap_pyfunction!(check_group_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(h1_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(exact_distance, m)?)?;
    m.add_function(wrap_pyfunction!(distinguishing_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sample_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(mixing_report, m)?)?;
    m.add_function(wrap_pyfunction!(render_to, m)?)?;
    Ok(())
}
