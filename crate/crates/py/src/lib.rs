//! Python bindings: `import gspmv`.

use std::fs;

use gspmv_core::matio::{self, parse_input};
use gspmv_core::metrics::bits_per_edge;
use gspmv_core::{BlockedMatrix, BuildParams, DegreeVector, FormatTag, PageRankConfig};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn tag(name: &str) -> PyResult<FormatTag> {
    FormatTag::from_name(name).ok_or_else(|| value_err(format!("unknown format {name:?}")))
}

/// Sparse Boolean matrix as sorted, deduplicated `(row, col)` pairs.
#[pyclass(name = "EdgeList", module = "gspmv", frozen)]
pub struct PyEdgeList {
    inner: matio::EdgeList,
}

#[pymethods]
impl PyEdgeList {
    #[new]
    fn new(n_rows: usize, n_cols: usize, edges: Vec<(u32, u32)>) -> PyResult<Self> {
        let inner = matio::EdgeList::from_edges(n_rows, n_cols, edges).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Parses an edge list or MatrixMarket text.
    #[staticmethod]
    fn parse(text: &[u8]) -> PyResult<Self> {
        Ok(Self {
            inner: parse_input(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let bytes = fs::read(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Self::parse(&bytes)
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self {
            inner: matio::EdgeList::identity(n),
        }
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.inner.n_cols()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.edges().to_vec()
    }

    fn transpose(&self) -> Self {
        Self {
            inner: matio::transpose(&self.inner),
        }
    }

    fn out_degrees(&self) -> Vec<u64> {
        matio::out_degrees(&self.inner).0
    }

    fn __len__(&self) -> usize {
        self.inner.m()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("EdgeList({}x{}, m={})", self.inner.n_rows(), self.inner.n_cols(), self.inner.m())
    }
}

/// A compressed matrix split into independently encoded row blocks.
#[pyclass(name = "Matrix", module = "gspmv", frozen)]
pub struct PyMatrix {
    inner: BlockedMatrix,
}

#[pymethods]
impl PyMatrix {
    #[new]
    #[pyo3(signature = (edges, format, blocks = 1, k = 2, window = 7))]
    fn new(edges: &PyEdgeList, format: &str, blocks: usize, k: u32, window: usize) -> PyResult<Self> {
        let params = BuildParams { k, window };
        let inner = BlockedMatrix::build(&edges.inner, tag(format)?, params, blocks).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self {
            inner: BlockedMatrix::from_bytes(data).map_err(value_err)?,
        })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    #[getter]
    fn format(&self) -> &'static str {
        self.inner.tag().name()
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.inner.n_cols()
    }

    #[getter]
    fn nnz(&self) -> u64 {
        self.inner.nnz()
    }

    #[getter]
    fn blocks(&self) -> usize {
        self.inner.blocks().len()
    }

    fn bits_per_edge(&self) -> PyResult<f64> {
        bits_per_edge(self.inner.to_bytes().len() as u64, self.inner.nnz()).map_err(value_err)
    }

    /// `A x` without decompressing.
    fn spmv(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        if x.len() != self.inner.n_cols() {
            return Err(value_err(format!("x has {} entries, matrix has {} columns", x.len(), self.inner.n_cols())));
        }
        Ok(self.inner.spmv(&x))
    }

    fn to_edge_list(&self) -> PyResult<PyEdgeList> {
        Ok(PyEdgeList {
            inner: self.inner.to_edge_list().map_err(value_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Matrix(format={}, {}x{}, nnz={}, blocks={})",
            self.inner.tag(),
            self.inner.n_rows(),
            self.inner.n_cols(),
            self.inner.nnz(),
            self.inner.blocks().len()
        )
    }
}

/// PageRank over a compressed transposed adjacency matrix.
///
/// Returns `(scores, iterations)`.
#[pyfunction]
#[pyo3(signature = (transposed, out_degrees, alpha = 0.15, iters = 100, tol = None, threads = 1))]
fn pagerank(
    transposed: &PyMatrix,
    out_degrees: Vec<u64>,
    alpha: f64,
    iters: usize,
    tol: Option<f64>,
    threads: usize,
) -> PyResult<(Vec<f64>, usize)> {
    let cfg = PageRankConfig {
        alpha,
        max_iters: iters,
        tol,
    };
    let res = gspmv_core::pagerank(&transposed.inner, &DegreeVector(out_degrees), &cfg, threads).map_err(value_err)?;
    Ok((res.pi, res.iters))
}

#[pyfunction]
fn formats() -> Vec<&'static str> {
    FormatTag::ALL.iter().map(|t| t.name()).collect()
}

#[pymodule]
fn gspmv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEdgeList>()?;
    m.add_class::<PyMatrix>()?;
    m.add_function(wrap_pyfunction!(pagerank, m)?)?;
    m.add_function(wrap_pyfunction!(formats, m)?)?;
    Ok(())
}
