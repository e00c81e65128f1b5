//! Python bindings. Matrices cross the boundary as sequences of rows.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lbm_selective::block::vectorize;
use lbm_selective::estimate::{self as est, CoolingSchedule, Method};
use lbm_selective::harness::{self, Scenario, ScenarioConfig};
use lbm_selective::inference::{self as inf, ReferenceBlock, Truncation};
use lbm_selective::specfun::SeededRng;
use lbm_selective::{DataMatrix, DataVector, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn data(rows: Vec<Vec<f64>>) -> PyResult<DataVector> {
    Ok(vectorize(&DataMatrix::from_rows(&rows).map_err(py_err)?))
}

fn schedule(t0: f64, ratio: f64, epsilon: f64, max_steps: Option<u64>) -> PyResult<CoolingSchedule> {
    Ok(CoolingSchedule::geometric(t0, ratio, epsilon).map_err(py_err)?.with_max_steps(max_steps))
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Row and column memberships, canonically relabeled.
#[pyclass(name = "BlockStructure", module = "lbm_selective", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyBlockStructure(lbm_selective::BlockStructure);

#[pymethods]
impl PyBlockStructure {
    #[new]
    #[pyo3(signature = (row_labels, col_labels, k_cap, h_cap))]
    fn new(row_labels: Vec<usize>, col_labels: Vec<usize>, k_cap: usize, h_cap: usize) -> PyResult<Self> {
        lbm_selective::BlockStructure::new(&row_labels, &col_labels, k_cap, h_cap)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn row_labels(&self) -> Vec<usize> {
        self.0.row_labels().to_vec()
    }

    #[getter]
    fn col_labels(&self) -> Vec<usize> {
        self.0.col_labels().to_vec()
    }

    #[getter]
    fn occupied_blocks(&self) -> usize {
        self.0.occupied_blocks()
    }

    fn squared_residue(&self, matrix: Vec<Vec<f64>>) -> PyResult<f64> {
        lbm_selective::block::squared_residue(&data(matrix)?, &self.0).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("BlockStructure(rows={:?}, cols={:?})", self.0.row_labels(), self.0.col_labels())
    }
}

#[pyclass(name = "EstimateResult", module = "lbm_selective", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEstimate {
    #[pyo3(get)]
    g_hat: PyBlockStructure,
    #[pyo3(get)]
    residue: f64,
    #[pyo3(get)]
    steps: u64,
    #[pyo3(get)]
    method: String,
}

impl From<est::EstimateResult> for PyEstimate {
    fn from(r: est::EstimateResult) -> Self {
        Self { g_hat: PyBlockStructure(r.g_hat), residue: r.residue, steps: r.steps, method: r.method.to_string() }
    }
}

#[pyclass(name = "KnownVarianceReport", module = "lbm_selective", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKnownReport {
    #[pyo3(get)]
    t: f64,
    #[pyo3(get)]
    dof: usize,
    #[pyo3(get)]
    beta: f64,
    #[pyo3(get)]
    p_selective: f64,
    #[pyo3(get)]
    p_naive: f64,
    #[pyo3(get)]
    degenerate: bool,
}

#[pyclass(name = "UnknownVarianceReport", module = "lbm_selective", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyUnknownReport {
    #[pyo3(get)]
    t_f: f64,
    #[pyo3(get)]
    d1: usize,
    #[pyo3(get)]
    d2: usize,
    #[pyo3(get)]
    block: (usize, usize),
    #[pyo3(get)]
    intervals: Vec<(f64, f64)>,
    #[pyo3(get)]
    p_selective: f64,
    #[pyo3(get)]
    p_naive: f64,
    #[pyo3(get)]
    degenerate: bool,
}

#[pyfunction]
#[pyo3(signature = (n, p, k, h, exact = false))]
fn count_structures(n: usize, p: usize, k: usize, h: usize, exact: bool) -> PyResult<u128> {
    lbm_selective::enumerate::count_structures(n, p, k, h, exact).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (matrix, k, h, method = "exact", seed = 0, t0 = 10.0, ratio = 0.99, epsilon = 1e-6, max_steps = None))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    py: Python<'_>,
    matrix: Vec<Vec<f64>>,
    k: usize,
    h: usize,
    method: &str,
    seed: u64,
    t0: f64,
    ratio: f64,
    epsilon: f64,
    max_steps: Option<u64>,
) -> PyResult<PyEstimate> {
    let x = data(matrix)?;
    let method: Method = parse(method)?;
    let sched = schedule(t0, ratio, epsilon, max_steps)?;
    py.detach(|| {
        let mut rng = SeededRng::new(seed);
        match method {
            Method::Exact => est::exact_minimizer(&x, k, h),
            Method::Anneal => est::sa_minimizer(&x, k, h, &sched, &mut rng),
            Method::TanWitten => est::tan_witten_minimizer(&x, k, h, &mut rng).map(|r| r.result),
        }
    })
    .map(PyEstimate::from)
    .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (matrix, g_hat, k, h, sigma0, truncation = "exact", seed = 0, t0 = 10.0, ratio = 0.99, epsilon = 1e-6))]
#[allow(clippy::too_many_arguments)]
fn known_variance_test(
    py: Python<'_>,
    matrix: Vec<Vec<f64>>,
    g_hat: PyRef<'_, PyBlockStructure>,
    k: usize,
    h: usize,
    sigma0: f64,
    truncation: &str,
    seed: u64,
    t0: f64,
    ratio: f64,
    epsilon: f64,
) -> PyResult<PyKnownReport> {
    let x = data(matrix)?;
    let trunc = match parse::<harness::TruncationKind>(truncation)? {
        harness::TruncationKind::Exact => Truncation::Exact,
        harness::TruncationKind::Anneal => Truncation::Anneal(schedule(t0, ratio, epsilon, None)?),
    };
    let g = g_hat.0.clone();
    let rep = py
        .detach(|| inf::known_variance_test(&x, &g, k, h, sigma0, &trunc, &mut SeededRng::new(seed)))
        .map_err(py_err)?;
    Ok(PyKnownReport {
        t: rep.t,
        dof: rep.dof,
        beta: rep.beta,
        p_selective: rep.p_selective,
        p_naive: rep.p_naive,
        degenerate: rep.degenerate,
    })
}

#[pyfunction]
#[pyo3(signature = (matrix, g_hat, k, h, reference = "first"))]
fn unknown_variance_test(
    py: Python<'_>,
    matrix: Vec<Vec<f64>>,
    g_hat: PyRef<'_, PyBlockStructure>,
    k: usize,
    h: usize,
    reference: &str,
) -> PyResult<PyUnknownReport> {
    let reference = match reference {
        "first" => ReferenceBlock::First,
        "largest" => ReferenceBlock::Largest,
        other => return Err(PyValueError::new_err(format!("unknown reference block `{other}`"))),
    };
    let x = data(matrix)?;
    let g = g_hat.0.clone();
    let rep = py.detach(|| inf::unknown_variance_test(&x, &g, k, h, reference)).map_err(py_err)?;
    Ok(PyUnknownReport {
        t_f: rep.t_f,
        d1: rep.d1,
        d2: rep.d2,
        block: rep.block,
        intervals: rep.intervals.iter().map(|iv| (iv.lo, iv.hi)).collect(),
        p_selective: rep.p_selective,
        p_naive: rep.p_naive,
        degenerate: rep.degenerate,
    })
}

#[pyfunction]
fn selective_p_value(t: f64, dof: usize, beta: f64) -> PyResult<f64> {
    inf::selective_p_value(t, dof, beta).map_err(py_err)
}

#[pyfunction]
fn naive_p_value(t: f64, dof: usize) -> PyResult<f64> {
    inf::naive_p_value(t, dof).map_err(py_err)
}

/// Runs a preset scenario and writes the trial records to `out` as CSV.
/// Returns the number of trials written.
#[pyfunction]
#[pyo3(signature = (scenario, n, p, out, trials = 1000, seed = 0, level = None, sigma0 = None, timing = true))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    scenario: &str,
    n: usize,
    p: usize,
    out: std::path::PathBuf,
    trials: usize,
    seed: u64,
    level: Option<u8>,
    sigma0: Option<f64>,
    timing: bool,
) -> PyResult<usize> {
    let mut c = ScenarioConfig::preset(parse::<Scenario>(scenario)?, n, p);
    c.trials = trials;
    c.seed = seed;
    c.level = level.unwrap_or(c.level);
    c.sigma0 = sigma0.unwrap_or(c.sigma0);
    c.timing = timing;
    let records = py.detach(|| harness::run_scenario(&c)).map_err(py_err)?;
    let file = std::fs::File::create(&out).map_err(|e| PyIOError::new_err(format!("{}: {e}", out.display())))?;
    harness::write_records(std::io::BufWriter::new(file), &records).map_err(py_err)?;
    Ok(records.len())
}

/// Summary of a records CSV as a dict; undefined metrics are `None`.
#[pyfunction]
#[pyo3(signature = (path, alphas = vec![0.1, 0.05, 0.01]))]
fn summarize<'py>(py: Python<'py>, path: std::path::PathBuf, alphas: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let file = std::fs::File::open(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
    let records = harness::read_records(file).map_err(py_err)?;
    let s = harness::summarize(&records, &alphas).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("trials", s.trials)?;
    d.set_item("null_trials", s.null_trials)?;
    d.set_item("alternative_trials", s.alternative_trials)?;
    d.set_item("degenerate_trials", s.degenerate_trials)?;
    d.set_item("accuracy", s.accuracy)?;
    d.set_item("ks_selective", s.ks_selective)?;
    d.set_item("ks_naive", s.ks_naive)?;
    let rates = s
        .rates
        .iter()
        .map(|r| {
            let e = PyDict::new(py);
            e.set_item("alpha", r.alpha)?;
            e.set_item("fpr_selective", r.fpr_selective)?;
            e.set_item("fpr_naive", r.fpr_naive)?;
            e.set_item("tpr_selective", r.tpr_selective)?;
            e.set_item("tpr_naive", r.tpr_naive)?;
            Ok(e)
        })
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("rates", rates)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "lbm_selective")]
fn lbm_selective_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBlockStructure>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyKnownReport>()?;
    m.add_class::<PyUnknownReport>()?;
    m.add_function(wrap_pyfunction!(count_structures, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(known_variance_test, m)?)?;
    m.add_function(wrap_pyfunction!(unknown_variance_test, m)?)?;
    m.add_function(wrap_pyfunction!(selective_p_value, m)?)?;
    m.add_function(wrap_pyfunction!(naive_p_value, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    Ok(())
}
