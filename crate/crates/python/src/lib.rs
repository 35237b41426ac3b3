//! Python bindings: frames, coherence diagnostics, sampling patterns, the
//! l1-analysis solver and the JSON experiment runner.

use anisocs_core::diagnostics;
use anisocs_core::experiments::{self, ExperimentConfig};
use anisocs_core::linops::{make_bundle, CMatrix, CVector, DenseOperator, FrameBundle};
use anisocs_core::sampling::{self, SamplingPattern, Scheme};
use anisocs_core::solver::{self, RecoveryProblem, SolverConfig};
use anisocs_core::transforms::{self, Wavelet};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: anisocs_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A frame with its canonical dual and frame bounds.
#[pyclass(module = "anisocs", name = "Frame", frozen)]
struct PyFrame {
    inner: FrameBundle,
}

fn bundle(op: DenseOperator) -> PyResult<PyFrame> {
    Ok(PyFrame {
        inner: make_bundle(op).map_err(py_err)?,
    })
}

fn rows_of(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[pymethods]
impl PyFrame {
    /// Build from analysis rows (row `l` holds the conjugate of `psi_l`).
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(PyValueError::new_err("rows must all have the same length"));
        }
        let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
        bundle(DenseOperator::from_row_major(n_rows, n_cols, &flat).map_err(py_err)?)
    }

    #[staticmethod]
    fn identity(n: usize) -> PyResult<Self> {
        bundle(DenseOperator::identity(n))
    }

    /// Unitary DFT with frequencies ordered by magnitude.
    #[staticmethod]
    fn dft(n: usize) -> PyResult<Self> {
        bundle(transforms::dft_matrix_1d(n))
    }

    /// Periodized orthonormal wavelet basis: "haar", "db2", "db3" or "db4".
    #[staticmethod]
    #[pyo3(signature = (name, n, levels, dim = 1))]
    fn wavelet(name: &str, n: usize, levels: usize, dim: usize) -> PyResult<Self> {
        let w = match name {
            "haar" => Wavelet::Haar,
            "db2" => Wavelet::Db2,
            "db3" => Wavelet::Db3,
            "db4" => Wavelet::Db4,
            other => return Err(PyValueError::new_err(format!("unknown wavelet {other:?}"))),
        };
        bundle(transforms::build_wavelet(w, n, levels, dim).map_err(py_err)?)
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.inner.n_cols()
    }

    /// `(A, B)`.
    #[getter]
    fn bounds(&self) -> (f64, f64) {
        (self.inner.lower_bound(), self.inner.upper_bound())
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    fn rows(&self) -> Vec<Vec<Complex64>> {
        rows_of(self.inner.op().matrix())
    }

    fn dual_rows(&self) -> Vec<Vec<Complex64>> {
        rows_of(self.inner.dual_op().matrix())
    }

    fn apply(&self, g: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        let y = self.inner.op().apply(&CVector::from_vec(g)).map_err(py_err)?;
        Ok(y.iter().copied().collect())
    }

    fn pinv_apply(&self, y: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        let g = self.inner.pinv_apply(&CVector::from_vec(y)).map_err(py_err)?;
        Ok(g.iter().copied().collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Frame(n_rows={}, n_cols={}, bounds=({:.6}, {:.6}))",
            self.inner.n_rows(),
            self.inner.n_cols(),
            self.inner.lower_bound(),
            self.inner.upper_bound()
        )
    }
}

/// Outcome of one l1-analysis solve.
#[pyclass(module = "anisocs", name = "Recovery", frozen, get_all)]
struct PyRecovery {
    signal: Vec<Complex64>,
    objective: f64,
    constraint_residual: f64,
    iterations: usize,
    converged: bool,
}

#[pymethods]
impl PyRecovery {
    fn __repr__(&self) -> String {
        format!(
            "Recovery(objective={:.6e}, iterations={}, converged={})",
            self.objective, self.iterations, self.converged
        )
    }
}

/// `(mu, per-row maxima)` over the four primal/dual families.
#[pyfunction]
fn mutual_coherence(u: &PyFrame, d: &PyFrame) -> PyResult<(f64, Vec<f64>)> {
    let r = diagnostics::mutual_coherence(&u.inner, &d.inner).map_err(py_err)?;
    Ok((r.mu, r.per_pair_max))
}

#[pyfunction]
fn coherence_weights(u: &PyFrame, d: &PyFrame, n: usize) -> PyResult<Vec<f64>> {
    Ok(diagnostics::coherence_weights(&u.inner, &d.inner, n)
        .map_err(py_err)?
        .weights)
}

#[pyfunction]
fn uniform_subset(n: usize, m: usize, seed: u64) -> PyResult<Vec<usize>> {
    Ok(sampling::uniform_subset(n, m, seed).map_err(py_err)?.indices)
}

#[pyfunction]
fn variable_density(weights: Vec<f64>, m: usize, seed: u64) -> PyResult<Vec<usize>> {
    Ok(sampling::variable_density(&weights, m, seed).map_err(py_err)?.indices)
}

/// `min ||D g||_1` subject to `||P_Omega U g - zeta|| <= epsilon`, in the
/// weighted data norm when `weights` is given.
#[pyfunction]
#[pyo3(signature = (u, d, indices, zeta, epsilon = 0.0, weights = None, max_iters = 50_000, tol = 1e-9))]
#[allow(clippy::too_many_arguments)]
fn solve(
    u: &PyFrame,
    d: &PyFrame,
    indices: Vec<usize>,
    zeta: Vec<Complex64>,
    epsilon: f64,
    weights: Option<Vec<f64>>,
    max_iters: usize,
    tol: f64,
) -> PyResult<PyRecovery> {
    let pattern = SamplingPattern::from_indices(u.inner.n_rows(), indices, Scheme::Uniform).map_err(py_err)?;
    let mut problem =
        RecoveryProblem::new(u.inner.op().clone(), d.inner.op().clone(), pattern, zeta, epsilon).map_err(py_err)?;
    let config = SolverConfig {
        max_iters,
        tol_primal: tol,
        tol_dual: tol,
        ..SolverConfig::default()
    };
    let result = match weights {
        Some(w) => {
            problem = problem.with_weights(w).map_err(py_err)?;
            solver::solve_weighted_l1(&problem, &config)
        }
        None => solver::solve_analysis_l1(&problem, &config),
    }
    .map_err(py_err)?;
    Ok(PyRecovery {
        signal: result.g,
        objective: result.objective,
        constraint_residual: result.constraint_residual,
        iterations: result.iterations,
        converged: result.converged,
    })
}

/// Runs a study from a JSON config and returns the report as JSON.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let report = py.detach(|| experiments::run(&cfg)).map_err(py_err)?;
    report.to_json().map_err(py_err)
}

#[pymodule]
fn anisocs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFrame>()?;
    m.add_class::<PyRecovery>()?;
    m.add_function(wrap_pyfunction!(mutual_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_weights, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_subset, m)?)?;
    m.add_function(wrap_pyfunction!(variable_density, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
