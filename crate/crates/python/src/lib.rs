//! Python bindings for `tarst_core`.
//!
//! Tensors cross the boundary as flat lists in first-index-fastest order,
//! matrices as lists of rows.

use pyo3::exceptions::{PyIndexError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tarst_core::bench;
use tarst_core::decomp::{self, Shrink, TarstOptions};
use tarst_core::{metrics, svht, textio, AspectRatio, DenseTensor, Error, HooiOptions, Matrix, Shape, ThresholdRule};

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Io { .. } | Error::Csv { .. } => PyOSError::new_err(msg),
        Error::SvdNonConvergence { .. } | Error::RootFinding(_) | Error::UndefinedMetric(_) => {
            PyRuntimeError::new_err(msg)
        }
        _ => PyValueError::new_err(msg),
    }
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    let n = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be a non-empty list of equal-length rows"));
    }
    Ok(Matrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

fn parse_shrink(s: &str) -> PyResult<Shrink> {
    match s {
        "hard" => Ok(Shrink::Hard),
        "soft" => Ok(Shrink::Soft),
        _ => Err(PyValueError::new_err(format!("shrink must be 'hard' or 'soft', got {s:?}"))),
    }
}

fn beta(b: f64) -> PyResult<AspectRatio> {
    AspectRatio::new(b).map_err(to_py)
}

/// Dense real tensor stored first-index-fastest.
#[pyclass(name = "Tensor", module = "tarst", skip_from_py_object)]
#[derive(Clone)]
pub struct PyTensor {
    inner: DenseTensor,
}

#[pymethods]
impl PyTensor {
    #[new]
    fn new(dims: Vec<usize>, data: Vec<f64>) -> PyResult<Self> {
        let shape = Shape::new(dims).map_err(to_py)?;
        Ok(PyTensor {
            inner: DenseTensor::from_vec(shape, data).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn zeros(dims: Vec<usize>) -> PyResult<Self> {
        Ok(PyTensor {
            inner: DenseTensor::zeros(Shape::new(dims).map_err(to_py)?),
        })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn numel(&self) -> usize {
        self.inner.numel()
    }

    /// Flat copy of the entries.
    fn data(&self) -> Vec<f64> {
        self.inner.as_slice().to_vec()
    }

    fn get(&self, index: Vec<usize>) -> PyResult<f64> {
        if index.len() != self.inner.order() || index.iter().zip(self.inner.dims()).any(|(i, d)| i >= d) {
            return Err(PyIndexError::new_err(format!("index {index:?} out of range")));
        }
        Ok(self.inner.get(&index))
    }

    fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    fn unfold(&self, mode: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix_rows(&self.inner.unfold(mode).map_err(to_py)?))
    }

    fn mode_product(&self, matrix: Vec<Vec<f64>>, mode: usize) -> PyResult<Self> {
        let u = matrix_from_rows(&matrix)?;
        Ok(PyTensor {
            inner: self.inner.mode_product(&u, mode).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Tensor(shape={}, norm={:.6})", self.inner.shape(), self.inner.frobenius_norm())
    }
}

#[pyclass(name = "TuckerModel", module = "tarst", skip_from_py_object)]
#[derive(Clone)]
pub struct PyTuckerModel {
    inner: decomp::TuckerModel,
}

#[pymethods]
impl PyTuckerModel {
    #[getter]
    fn ranks(&self) -> Vec<usize> {
        self.inner.ranks()
    }

    #[getter]
    fn core(&self) -> PyTensor {
        PyTensor {
            inner: self.inner.core().clone(),
        }
    }

    /// Factor matrices as lists of rows.
    #[getter]
    fn factors(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.factors().iter().map(matrix_rows).collect()
    }

    fn reconstruct(&self) -> PyResult<PyTensor> {
        Ok(PyTensor {
            inner: decomp::reconstruct(&self.inner).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("TuckerModel(ranks={:?})", self.inner.ranks())
    }
}

#[pyclass(name = "TarstReport", module = "tarst")]
pub struct PyTarstReport {
    inner: decomp::TarstReport,
}

#[pymethods]
impl PyTarstReport {
    #[getter]
    fn estimated_ranks(&self) -> Vec<usize> {
        self.inner.estimated_ranks.clone()
    }

    #[getter]
    fn thresholds(&self) -> Vec<f64> {
        self.inner.thresholds.clone()
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.inner.degenerate()
    }

    /// Singular values of each mode unfolding.
    #[getter]
    fn singular_values(&self) -> Vec<Vec<f64>> {
        self.inner.modes.iter().map(|m| m.singular_values.clone()).collect()
    }

    #[getter]
    fn model(&self) -> Option<PyTuckerModel> {
        self.inner.model.clone().map(|inner| PyTuckerModel { inner })
    }

    fn estimate(&self) -> PyResult<PyTensor> {
        Ok(PyTensor {
            inner: self.inner.estimate().map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("TarstReport(ranks={:?})", self.inner.estimated_ranks)
    }
}

#[pyclass(name = "HooiResult", module = "tarst")]
pub struct PyHooiResult {
    #[pyo3(get)]
    model: PyTuckerModel,
    #[pyo3(get)]
    fits: Vec<f64>,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    converged: bool,
}

/// Rank-free denoising. Uses the known noise level when `sigma` is given,
/// the median singular value otherwise.
#[pyfunction(name = "tarst")]
#[pyo3(signature = (y, sigma=None, shrink="hard"))]
fn denoise(y: &PyTensor, sigma: Option<f64>, shrink: &str) -> PyResult<PyTarstReport> {
    let rule = match sigma {
        Some(s) => ThresholdRule::known_sigma(s).map_err(to_py)?,
        None => ThresholdRule::MedianBased,
    };
    let opts = TarstOptions {
        rule,
        shrink: parse_shrink(shrink)?,
    };
    Ok(PyTarstReport {
        inner: decomp::tarst_with(&y.inner, &opts).map_err(to_py)?,
    })
}

#[pyfunction]
fn hosvd(y: &PyTensor, ranks: Vec<usize>) -> PyResult<PyTuckerModel> {
    Ok(PyTuckerModel {
        inner: decomp::hosvd(&y.inner, &ranks).map_err(to_py)?,
    })
}

#[pyfunction]
#[pyo3(signature = (y, ranks, tol=1e-8, max_iter=50))]
fn hooi(y: &PyTensor, ranks: Vec<usize>, tol: f64, max_iter: usize) -> PyResult<PyHooiResult> {
    let out = decomp::hooi(&y.inner, &ranks, &HooiOptions { tol, max_iter }).map_err(to_py)?;
    Ok(PyHooiResult {
        model: PyTuckerModel { inner: out.model },
        fits: out.fits,
        iterations: out.iterations,
        converged: out.converged,
    })
}

#[pyfunction]
fn lambda_star(b: f64) -> PyResult<f64> {
    Ok(svht::lambda_star(beta(b)?))
}

#[pyfunction]
fn mp_median(b: f64) -> PyResult<f64> {
    svht::mp_median(beta(b)?).map_err(to_py)
}

#[pyfunction]
fn omega(b: f64) -> PyResult<f64> {
    svht::omega(beta(b)?).map_err(to_py)
}

#[pyfunction]
fn rrse(estimate: &PyTensor, truth: &PyTensor) -> PyResult<f64> {
    metrics::rrse(&estimate.inner, &truth.inner).map_err(to_py)
}

#[pyfunction]
fn gen_lowrank_tensor(dims: Vec<usize>, ranks: Vec<usize>, mean: f64, std: f64, seed: u64) -> PyResult<PyTensor> {
    let shape = Shape::new(dims).map_err(to_py)?;
    Ok(PyTensor {
        inner: bench::gen_lowrank_tensor(&shape, &ranks, mean, std, seed).map_err(to_py)?,
    })
}

#[pyfunction]
fn add_gaussian_noise(x: &PyTensor, sigma: f64, seed: u64) -> PyResult<PyTensor> {
    Ok(PyTensor {
        inner: bench::add_gaussian_noise(&x.inner, sigma, seed).map_err(to_py)?,
    })
}

#[pyfunction]
fn read_tensor(path: &str) -> PyResult<PyTensor> {
    Ok(PyTensor {
        inner: textio::read_tensor(path).map_err(to_py)?,
    })
}

#[pyfunction]
fn write_tensor(path: &str, t: &PyTensor) -> PyResult<()> {
    textio::write_tensor(path, &t.inner).map_err(to_py)
}

#[pymodule(name = "tarst")]
pub fn tarst_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PyTuckerModel>()?;
    m.add_class::<PyTarstReport>()?;
    m.add_class::<PyHooiResult>()?;
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(hosvd, m)?)?;
    m.add_function(wrap_pyfunction!(hooi, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_star, m)?)?;
    m.add_function(wrap_pyfunction!(mp_median, m)?)?;
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    m.add_function(wrap_pyfunction!(rrse, m)?)?;
    m.add_function(wrap_pyfunction!(gen_lowrank_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(add_gaussian_noise, m)?)?;
    m.add_function(wrap_pyfunction!(read_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(write_tensor, m)?)?;
    Ok(())
}
