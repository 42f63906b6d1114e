//! Python bindings for the stochain engine: load BIF networks, run
//! stretch-and-infer queries, inspect chain widths, and cross-check against
//! the brute-force oracle.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use stochain::{oracle, Error, InferConfig, Predicate, Query};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Parse { .. } | Error::Unsupported { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// A discrete distribution over one node's labels.
#[pyclass(name = "State", module = "stochain_py")]
struct PyState {
    inner: stochain::State,
}

#[pymethods]
impl PyState {
    /// Label strings in index order.
    fn labels(&self) -> Vec<String> {
        (0..self.inner.space().size())
            .map(|i| self.inner.space().point_label(i))
            .collect()
    }

    /// Probabilities in index order.
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    /// `{label: probability}` in index order.
    fn items(&self) -> Vec<(String, f64)> {
        self.labels()
            .into_iter()
            .zip(self.inner.probs().iter().copied())
            .collect()
    }

    /// Ket notation, e.g. `0.3669|yes> + 0.6331|no>`.
    fn ket(&self) -> String {
        self.inner.to_string()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("State({})", self.inner)
    }
}

/// A discrete Bayesian network.
#[pyclass(name = "BayesNet", module = "stochain_py")]
struct PyBayesNet {
    inner: stochain::BayesNet,
}

fn evidence_from_dict(
    net: &stochain::BayesNet,
    evidence: Option<&Bound<'_, PyDict>>,
) -> PyResult<Vec<(String, Predicate)>> {
    let mut out = Vec::new();
    let Some(dict) = evidence else {
        return Ok(out);
    };
    for (key, value) in dict.iter() {
        let node: String = key.extract()?;
        let def = net.node(&node).map_err(to_py_err)?;
        let space = net.var_space(&node).map_err(to_py_err)?;
        let pred = if let Ok(label) = value.extract::<String>() {
            let idx = def.labels.iter().position(|l| *l == label).ok_or_else(|| {
                PyValueError::new_err(format!("`{label}` is not a label of {node}"))
            })?;
            Predicate::indicator(space, idx).map_err(to_py_err)?
        } else if let Ok(vals) = value.extract::<Vec<f64>>() {
            Predicate::new(space, vals).map_err(to_py_err)?
        } else {
            return Err(PyValueError::new_err(format!(
                "evidence for {node} must be a label string or a list of floats"
            )));
        };
        out.push((node, pred));
    }
    Ok(out)
}

#[pymethods]
impl PyBayesNet {
    /// Parse a network from BIF text.
    #[staticmethod]
    fn from_bif(text: &str) -> PyResult<Self> {
        Ok(PyBayesNet {
            inner: stochain::parse_bif(text).map_err(to_py_err)?,
        })
    }

    /// Parse a network from a BIF file on disk.
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PyIOError::new_err(format!("cannot read {path}: {e}")))?;
        Self::from_bif(&text)
    }

    /// Node names in declaration order.
    fn nodes(&self) -> Vec<String> {
        self.inner.node_names()
    }

    fn labels(&self, node: &str) -> PyResult<Vec<String>> {
        Ok(self.inner.node(node).map_err(to_py_err)?.labels.clone())
    }

    fn parents(&self, node: &str) -> PyResult<Vec<String>> {
        Ok(self.inner.node(node).map_err(to_py_err)?.parents.clone())
    }

    /// The sub-network of ancestors of the given nodes.
    fn prune(&self, relevant: &Bound<'_, PyList>) -> PyResult<Self> {
        let names: Vec<String> = relevant.extract()?;
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(PyBayesNet {
            inner: self.inner.prune(&refs).map_err(to_py_err)?,
        })
    }

    /// Serialize back to BIF text.
    fn to_bif(&self) -> String {
        stochain::serialize_bif(&self.inner)
    }

    /// Posterior of `observe` given `evidence` (dict of node -> label or
    /// node -> list of floats), via stretch-and-infer.
    #[pyo3(signature = (observe, evidence=None, *, seed=0, dry_runs=1000, prune=true))]
    fn infer(
        &self,
        observe: &str,
        evidence: Option<&Bound<'_, PyDict>>,
        seed: u64,
        dry_runs: usize,
        prune: bool,
    ) -> PyResult<PyState> {
        let query = Query::new(observe, evidence_from_dict(&self.inner, evidence)?);
        let cfg = InferConfig {
            dry_runs,
            seed,
            prune,
        };
        Ok(PyState {
            inner: stochain::infer(&self.inner, &query, &cfg).map_err(to_py_err)?,
        })
    }

    /// Prior marginal of a node.
    #[pyo3(signature = (node, *, seed=0, dry_runs=1000))]
    fn marginal(&self, node: &str, seed: u64, dry_runs: usize) -> PyResult<PyState> {
        self.infer(node, None, seed, dry_runs, true)
    }

    /// Ground-truth answer by full joint enumeration (subject to a size cap).
    #[pyo3(signature = (observe, evidence=None))]
    fn brute_infer(
        &self,
        observe: &str,
        evidence: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<PyState> {
        let query = Query::new(observe, evidence_from_dict(&self.inner, evidence)?);
        Ok(PyState {
            inner: oracle::brute_infer(&self.inner, &query).map_err(to_py_err)?,
        })
    }

    /// `(order, width)` of the lowest-width chain found over `runs` dry runs,
    /// keeping the sink wires live.
    #[pyo3(signature = (runs=1000, seed=0))]
    fn best_order(&self, runs: usize, seed: u64) -> PyResult<(Vec<String>, usize)> {
        let sinks = self.inner.sinks();
        let keep: Vec<&str> = sinks.iter().map(String::as_str).collect();
        stochain::dry_run_select(&self.inner, &keep, runs, seed).map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "BayesNet(name={:?}, nodes={})",
            self.inner.name(),
            self.inner.len()
        )
    }
}

#[pymodule]
fn stochain_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBayesNet>()?;
    m.add_class::<PyState>()?;
    Ok(())
}
