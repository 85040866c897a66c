use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use qdp::cli::AlgorithmFile;
use qdp::encoding::{self, Axis, ClassicalVector};
use qdp::linalg::{ComplexMatrix, C64};
use qdp::model::{self, DensityMatrix, QuantumAlgorithm};
use qdp::verifier::{self, Counterexample, DpParams, SubsetReport, VerifyOptions};
use qdp::QdpError;

create_exception!(qdp, QdpCoreError, PyException);

type Matrix = Vec<Vec<C64>>;

fn err(e: QdpError) -> PyErr {
    QdpCoreError::new_err(format!("{}: {}", e.code(), e))
}

fn options(subset_cap: usize) -> VerifyOptions {
    VerifyOptions { subset_cap, ..VerifyOptions::default() }
}

fn to_rows(m: &ComplexMatrix) -> Matrix {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect()).collect()
}

fn density(rows: Matrix) -> PyResult<DensityMatrix> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(err(QdpError::InvalidMatrix("matrix is not square".into())));
    }
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    DensityMatrix::from_matrix(ComplexMatrix::new(m).map_err(err)?).map_err(err)
}

fn parse_axis(s: &str) -> PyResult<Axis> {
    match s {
        "x" | "X" => Ok(Axis::X),
        "y" | "Y" => Ok(Axis::Y),
        "z" | "Z" => Ok(Axis::Z),
        other => Err(err(QdpError::InvalidInput(format!("unknown axis `{other}`")))),
    }
}

fn classical(values: Vec<f64>, axis: &str) -> PyResult<ClassicalVector> {
    ClassicalVector::uniform(values, parse_axis(axis)?).map_err(err)
}

/// A noisy quantum algorithm: a channel followed by a measurement.
#[pyclass(name = "Algorithm", frozen)]
struct PyAlgorithm {
    inner: QuantumAlgorithm,
}

#[pymethods]
impl PyAlgorithm {
    #[staticmethod]
    #[pyo3(signature = (text, subset_cap = verifier::DEFAULT_SUBSET_CAP))]
    fn from_json(text: &str, subset_cap: usize) -> PyResult<Self> {
        let f = AlgorithmFile::from_json_str(text).map_err(err)?;
        Ok(Self { inner: f.to_algorithm(subset_cap).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (path, subset_cap = verifier::DEFAULT_SUBSET_CAP))]
    fn load(path: PathBuf, subset_cap: usize) -> PyResult<Self> {
        let f = AlgorithmFile::load(&path).map_err(err)?;
        Ok(Self { inner: f.to_algorithm(subset_cap).map_err(err)? })
    }

    fn to_json(&self) -> String {
        AlgorithmFile::from_algorithm(&self.inner).to_json_string()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.povm().labels().to_vec()
    }

    /// Outcome probabilities for the input state, keyed by label.
    fn measure(&self, rho: Matrix) -> PyResult<Vec<(String, f64)>> {
        let d = self.inner.measure_distribution(&density(rho)?).map_err(err)?;
        Ok(d.labels.into_iter().zip(d.probs).collect())
    }

    fn __repr__(&self) -> String {
        format!("Algorithm(n_qubits={}, outcomes={})", self.inner.n_qubits(), self.inner.povm().len())
    }
}

/// Extremal-mixture pair that violates the requested guarantee.
#[pyclass(name = "Counterexample", frozen, get_all)]
struct PyCounterexample {
    gamma: Matrix,
    phi: Matrix,
    subset: Vec<String>,
    violation_amount: f64,
    eta: f64,
}

impl From<&Counterexample> for PyCounterexample {
    fn from(c: &Counterexample) -> Self {
        Self {
            gamma: to_rows(c.gamma.matrix().matrix()),
            phi: to_rows(c.phi.matrix().matrix()),
            subset: c.witness_subset.clone(),
            violation_amount: c.violation_amount,
            eta: c.eta_used,
        }
    }
}

#[pyclass(name = "SubsetReport", frozen, get_all)]
struct PySubsetReport {
    subset: Vec<String>,
    lambda_max: f64,
    lambda_min: f64,
    delta_s: f64,
    kappa: f64,
}

impl From<&SubsetReport> for PySubsetReport {
    fn from(r: &SubsetReport) -> Self {
        Self {
            subset: r.subset.clone(),
            lambda_max: r.lambda_max,
            lambda_min: r.lambda_min,
            delta_s: r.delta_s,
            kappa: r.kappa,
        }
    }
}

#[pyclass(name = "Verdict", frozen, get_all)]
struct PyVerdict {
    private: bool,
    delta_star: f64,
    kappa_star: f64,
    witness: Option<Py<PyCounterexample>>,
    per_subset: Vec<Py<PySubsetReport>>,
}

impl PyVerdict {
    fn build(py: Python<'_>, v: &verifier::Verdict) -> PyResult<Self> {
        Ok(Self {
            private: v.private,
            delta_star: v.delta_star,
            kappa_star: v.kappa_star,
            witness: v.witness.as_ref().map(|c| Py::new(py, PyCounterexample::from(c))).transpose()?,
            per_subset: v.per_subset.iter().map(|r| Py::new(py, PySubsetReport::from(r))).collect::<PyResult<_>>()?,
        })
    }
}

#[pymethods]
impl PyVerdict {
    fn __repr__(&self) -> String {
        format!("Verdict(private={}, delta_star={}, kappa_star={})", self.private, self.delta_star, self.kappa_star)
    }
}

#[pyfunction]
#[pyo3(signature = (algorithm, epsilon, delta, eta, subset_cap = verifier::DEFAULT_SUBSET_CAP))]
fn verify_dp(
    py: Python<'_>,
    algorithm: &PyAlgorithm,
    epsilon: f64,
    delta: f64,
    eta: f64,
    subset_cap: usize,
) -> PyResult<PyVerdict> {
    let p = DpParams::new(epsilon, delta, eta).map_err(err)?;
    let v = py.detach(|| verifier::verify_dp(&algorithm.inner, &p, &options(subset_cap))).map_err(err)?;
    PyVerdict::build(py, &v)
}

#[pyfunction]
#[pyo3(signature = (algorithm, epsilon, eta, subset_cap = verifier::DEFAULT_SUBSET_CAP))]
fn verify_eps_dp(py: Python<'_>, algorithm: &PyAlgorithm, epsilon: f64, eta: f64, subset_cap: usize) -> PyResult<PyVerdict> {
    let v = py.detach(|| verifier::verify_eps_dp(&algorithm.inner, epsilon, eta, &options(subset_cap))).map_err(err)?;
    PyVerdict::build(py, &v)
}

/// Returns `(kappa_star, worst_subset)`.
#[pyfunction]
#[pyo3(signature = (algorithm, subset_cap = verifier::DEFAULT_SUBSET_CAP))]
fn max_condition_number(py: Python<'_>, algorithm: &PyAlgorithm, subset_cap: usize) -> PyResult<(f64, Vec<String>)> {
    let k = py.detach(|| verifier::max_condition_number(&algorithm.inner, 1.0, &options(subset_cap))).map_err(err)?;
    Ok((k.kappa_star, k.report.subset))
}

#[pyfunction]
fn optimal_epsilon(kappa_star: f64, eta: f64) -> f64 {
    verifier::optimal_epsilon(kappa_star, eta)
}

#[pyfunction]
#[pyo3(signature = (algorithm, etas, subset_cap = verifier::DEFAULT_SUBSET_CAP))]
fn epsilon_curve(py: Python<'_>, algorithm: &PyAlgorithm, etas: Vec<f64>, subset_cap: usize) -> PyResult<Vec<(f64, f64)>> {
    py.detach(|| verifier::epsilon_curve(&algorithm.inner, &etas, &options(subset_cap))).map_err(err)
}

#[pyfunction]
fn compose_parallel(first: &PyAlgorithm, s1: Vec<String>, second: &PyAlgorithm, s2: Vec<String>) -> PyResult<PyAlgorithm> {
    let inner = verifier::compose_parallel(&first.inner, &s1, &second.inner, &s2).map_err(err)?;
    Ok(PyAlgorithm { inner })
}

#[pyfunction]
fn trace_distance(rho: Matrix, sigma: Matrix) -> PyResult<f64> {
    model::trace_distance(&density(rho)?, &density(sigma)?).map_err(err)
}

/// Density matrix of the product state `R_axis(v_0)|0> ⊗ R_axis(v_1)|0> ⊗ ...`.
#[pyfunction]
#[pyo3(signature = (values, axis = "y"))]
fn angle_encode(values: Vec<f64>, axis: &str) -> PyResult<Matrix> {
    let rho = encoding::angle_encode(&classical(values, axis)?).map_err(err)?;
    Ok(to_rows(rho.matrix().matrix()))
}

#[pyfunction]
#[pyo3(signature = (v, w, axis = "y"))]
fn encoded_neighbor_distance(v: Vec<f64>, w: Vec<f64>, axis: &str) -> PyResult<f64> {
    encoding::encoded_neighbor_distance(&classical(v, axis)?, &classical(w, axis)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (values, pad = false))]
fn amplitude_encode(values: Vec<f64>, pad: bool) -> PyResult<Matrix> {
    let enc = encoding::amplitude_encode(&values, pad).map_err(err)?;
    Ok(to_rows(enc.state.matrix().matrix()))
}

#[pymodule]
#[pyo3(name = "qdp")]
fn qdp_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QdpCoreError", m.py().get_type::<QdpCoreError>())?;
    m.add_class::<PyAlgorithm>()?;
    m.add_class::<PyVerdict>()?;
    m.add_class::<PyCounterexample>()?;
    m.add_class::<PySubsetReport>()?;
    m.add_function(wrap_pyfunction!(verify_dp, m)?)?;
    m.add_function(wrap_pyfunction!(verify_eps_dp, m)?)?;
    m.add_function(wrap_pyfunction!(max_condition_number, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_curve, m)?)?;
    m.add_function(wrap_pyfunction!(compose_parallel, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(angle_encode, m)?)?;
    m.add_function(wrap_pyfunction!(encoded_neighbor_distance, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude_encode, m)?)?;
    Ok(())
}
