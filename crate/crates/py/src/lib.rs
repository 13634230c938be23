//! Python bindings: rates, boundaries, exact and Monte Carlo operating
//! characteristics, design search, and the trial-level rules.

use merit_core::copula;
use merit_core::hypothesis::{self, enumerate_alternative, enumerate_null, least_favorable_set};
use merit_core::oc::{self, EvalMode, PowerKind};
use merit_core::search::{self, DesignSpec};
use merit_core::trial::{self, Direction, InterimPolicy, TrialDesign};
use merit_core::MeritError;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: MeritError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kind(k: u8) -> PyResult<PowerKind> {
    match k {
        1 => Ok(PowerKind::I),
        2 => Ok(PowerKind::II),
        _ => Err(PyValueError::new_err(format!("power kind must be 1 or 2, got {k}"))),
    }
}

fn mode(replicates: Option<u64>, seed: u64) -> EvalMode {
    match replicates {
        Some(replicates) => EvalMode::MonteCarlo { replicates, seed },
        None => EvalMode::Exact,
    }
}

#[pyclass(name = "DesignRates", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyRates(hypothesis::DesignRates);

#[pymethods]
impl PyRates {
    #[new]
    #[pyo3(signature = (phi_t0 = 0.4, phi_t1 = 0.2, phi_e0 = 0.2, phi_e1 = 0.4))]
    fn new(phi_t0: f64, phi_t1: f64, phi_e0: f64, phi_e1: f64) -> PyResult<Self> {
        hypothesis::DesignRates::new(phi_t0, phi_t1, phi_e0, phi_e1)
            .map(PyRates)
            .map_err(err)
    }

    #[getter]
    fn phi_t0(&self) -> f64 {
        self.0.phi_t0
    }
    #[getter]
    fn phi_t1(&self) -> f64 {
        self.0.phi_t1
    }
    #[getter]
    fn phi_e0(&self) -> f64 {
        self.0.phi_e0
    }
    #[getter]
    fn phi_e1(&self) -> f64 {
        self.0.phi_e1
    }

    fn __repr__(&self) -> String {
        let r = &self.0;
        format!("DesignRates({}, {}, {}, {})", r.phi_t0, r.phi_t1, r.phi_e0, r.phi_e1)
    }
}

#[pyclass(name = "Boundary", frozen, eq, hash, from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PyBoundary(oc::Boundary);

#[pymethods]
impl PyBoundary {
    #[new]
    fn new(n: usize, m_t: usize, m_e: usize) -> PyResult<Self> {
        oc::Boundary::new(n, m_t, m_e).map(PyBoundary).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }
    #[getter]
    fn m_t(&self) -> usize {
        self.0.m_t
    }
    #[getter]
    fn m_e(&self) -> usize {
        self.0.m_e
    }

    fn as_tuple(&self) -> (usize, usize, usize) {
        (self.0.n, self.0.m_t, self.0.m_e)
    }

    fn __repr__(&self) -> String {
        format!("Boundary({}, {}, {})", self.0.n, self.0.m_t, self.0.m_e)
    }
}

/// Global operating characteristics. Scenario entries are
/// `(scenario, label, value, se)` tuples; `se` is None for exact values.
#[pyclass(name = "OcResult", frozen, get_all)]
pub struct PyOc {
    global_alpha: f64,
    global_power: f64,
    per_null_alpha: Vec<(u32, String, f64, Option<f64>)>,
    per_lfs_power: Vec<(u32, String, f64, Option<f64>)>,
    power_kind: u8,
    replicates: u64,
}

impl From<&oc::OcResult> for PyOc {
    fn from(o: &oc::OcResult) -> Self {
        let rows = |v: &[oc::ScenarioValue]| {
            v.iter()
                .map(|s| (s.scenario, s.label.to_string(), s.value, s.se))
                .collect()
        };
        PyOc {
            global_alpha: o.global_alpha,
            global_power: o.global_power,
            per_null_alpha: rows(&o.per_null_alpha),
            per_lfs_power: rows(&o.per_lfs_power),
            power_kind: o.kind.index(),
            replicates: o.replicates,
        }
    }
}

#[pyclass(name = "DesignResult", frozen, get_all)]
pub struct PyDesign {
    boundary: PyBoundary,
    feasible: bool,
    oc: Py<PyOc>,
    alternatives_at_n: Vec<(usize, usize, usize)>,
}

#[pymethods]
impl PyDesign {
    fn __repr__(&self) -> String {
        let b = self.boundary.0;
        format!("DesignResult(n={}, m_t={}, m_e={}, feasible={})", b.n, b.m_t, b.m_e, self.feasible)
    }
}

/// `(p00, p01, p10, p11)` for toxicity rate `phi_t`, efficacy rate `phi_e`.
#[pyfunction]
fn cell_probabilities(phi_t: f64, phi_e: f64, rho: f64) -> PyResult<(f64, f64, f64, f64)> {
    let c = copula::cell_probabilities(phi_t, phi_e, rho).map_err(err)?;
    Ok((c.p00, c.p01, c.p10, c.p11))
}

/// Pr(n_T <= m_t, n_E >= m_e) for one arm of size n.
#[pyfunction]
fn joint_tail(n: usize, m_t: usize, m_e: usize, phi_t: f64, phi_e: f64, rho: f64) -> PyResult<f64> {
    let c = copula::cell_probabilities(phi_t, phi_e, rho).map_err(err)?;
    copula::joint_tail(n, m_t, m_e, &c).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (boundary, doses, rates, rho = 0.5, power_kind = 1, replicates = None, seed = 0))]
fn global_oc(
    boundary: PyBoundary,
    doses: usize,
    rates: PyRates,
    rho: f64,
    power_kind: u8,
    replicates: Option<u64>,
    seed: u64,
) -> PyResult<PyOc> {
    let o = oc::global_oc(&boundary.0, doses, &rates.0, rho, kind(power_kind)?, mode(replicates, seed)).map_err(err)?;
    Ok(PyOc::from(&o))
}

/// Exact power under every alternative as `(scenario, label, power)`.
#[pyfunction]
#[pyo3(signature = (boundary, doses, rates, rho = 0.5, power_kind = 1))]
fn power_over_all_alternatives(
    boundary: PyBoundary,
    doses: usize,
    rates: PyRates,
    rho: f64,
    power_kind: u8,
) -> PyResult<Vec<(u32, String, f64)>> {
    let v = oc::power_over_all_alternatives(&boundary.0, doses, &rates.0, rho, kind(power_kind)?).map_err(err)?;
    Ok(v.into_iter().map(|s| (s.scenario, s.label.to_string(), s.value)).collect())
}

#[pyfunction]
#[pyo3(signature = (rates, doses, alpha_star, beta_star, power_kind = 1, rho = 0.5, n_max = 100, replicates = None, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn find_optimal_design(
    py: Python<'_>,
    rates: PyRates,
    doses: usize,
    alpha_star: f64,
    beta_star: f64,
    power_kind: u8,
    rho: f64,
    n_max: usize,
    replicates: Option<u64>,
    seed: u64,
) -> PyResult<PyDesign> {
    let spec = DesignSpec {
        rates: rates.0,
        doses,
        alpha_star,
        beta_star,
        power_kind: kind(power_kind)?,
        rho,
        n_max,
        mode: mode(replicates, seed),
    };
    let r = py.detach(|| search::find_optimal_design(&spec)).map_err(err)?;
    Ok(PyDesign {
        boundary: PyBoundary(r.boundary),
        feasible: r.feasible,
        oc: Py::new(py, PyOc::from(&r.oc))?,
        alternatives_at_n: r.alternatives_at_n.iter().map(|b| (b.n, b.m_t, b.m_e)).collect(),
    })
}

/// Theorem check over full boundary grids at each `n`; returns
/// `(comparisons, violations)`.
#[pyfunction]
#[pyo3(signature = (doses, rates, rho, sizes))]
fn verify_theorem1(py: Python<'_>, doses: usize, rates: PyRates, rho: f64, sizes: Vec<usize>) -> PyResult<(usize, usize)> {
    let grid: Vec<oc::Boundary> = sizes.into_iter().flat_map(oc::Boundary::full_grid).collect();
    let r = py.detach(|| oc::verify_theorem1(doses, &rates.0, rho, &grid)).map_err(err)?;
    Ok((r.rows.len(), r.violations().count()))
}

/// Scenario labels in numbering order: nulls, then alternatives.
#[pyfunction]
fn scenarios(doses: usize) -> PyResult<Vec<(u32, String)>> {
    let r = hypothesis::DesignRates::default();
    let mut out: Vec<(u32, String)> = enumerate_null(doses, &r)
        .map_err(err)?
        .iter()
        .chain(&enumerate_alternative(doses, &r).map_err(err)?)
        .map(|c| (c.scenario(), c.label.to_string()))
        .collect();
    out.sort();
    Ok(out)
}

/// Least favorable configurations as lists of `(pi_T, pi_E)` per dose.
#[pyfunction]
fn least_favorable(doses: usize, rates: PyRates) -> PyResult<Vec<Vec<(f64, f64)>>> {
    Ok(least_favorable_set(doses, &rates.0)
        .map_err(err)?
        .iter()
        .map(|c| c.doses.iter().map(|d| (d.pi_t, d.pi_e)).collect())
        .collect())
}

#[pyfunction]
fn pava_adjust(values: Vec<f64>, weights: Vec<f64>) -> PyResult<Vec<f64>> {
    trial::pava_adjust(&values, &weights).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (x, n, threshold, a = 0.1, b = 0.1, above = true))]
fn posterior_exceedance(x: usize, n: usize, threshold: f64, a: f64, b: f64, above: bool) -> PyResult<f64> {
    let d = if above { Direction::Above } else { Direction::Below };
    trial::posterior_exceedance(x, n, threshold, a, b, d).map_err(err)
}

/// Paired with/without-interim simulation over every scenario. Rows are
/// dicts keyed like the CLI's CSV columns.
#[pyfunction]
#[pyo3(signature = (boundary, doses, rates, looks = vec![0.5], rho = 0.5, power_kind = 1, replicates = 100_000, seed = 0, c_t = 0.95, c_e = 0.95))]
#[allow(clippy::too_many_arguments)]
fn simulate_interim(
    py: Python<'_>,
    boundary: PyBoundary,
    doses: usize,
    rates: PyRates,
    looks: Vec<f64>,
    rho: f64,
    power_kind: u8,
    replicates: u64,
    seed: u64,
    c_t: f64,
    c_e: f64,
) -> PyResult<Vec<(u32, String, f64, f64, f64, f64)>> {
    let policy = InterimPolicy {
        looks,
        c_t,
        c_e,
        ..Default::default()
    };
    let design = TrialDesign::new(boundary.0, rates.0).with_policy(policy);
    let mut configs = enumerate_null(doses, &rates.0).map_err(err)?;
    configs.extend(enumerate_alternative(doses, &rates.0).map_err(err)?);
    let k = kind(power_kind)?;
    let rows = py
        .detach(|| trial::simulate_oc_with_interim(&configs, &design, rho, k, replicates, seed))
        .map_err(err)?;
    Ok(rows
        .into_iter()
        .map(|r| {
            (
                r.scenario,
                r.label.to_string(),
                r.without.probability.value,
                r.with.probability.value,
                r.without.expected_n.value,
                r.with.expected_n.value,
            )
        })
        .collect())
}

#[pymodule]
pub fn merit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRates>()?;
    m.add_class::<PyBoundary>()?;
    m.add_class::<PyOc>()?;
    m.add_class::<PyDesign>()?;
    m.add_function(wrap_pyfunction!(cell_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(joint_tail, m)?)?;
    m.add_function(wrap_pyfunction!(global_oc, m)?)?;
    m.add_function(wrap_pyfunction!(power_over_all_alternatives, m)?)?;
    m.add_function(wrap_pyfunction!(find_optimal_design, m)?)?;
    m.add_function(wrap_pyfunction!(verify_theorem1, m)?)?;
    m.add_function(wrap_pyfunction!(scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(least_favorable, m)?)?;
    m.add_function(wrap_pyfunction!(pava_adjust, m)?)?;
    m.add_function(wrap_pyfunction!(posterior_exceedance, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_interim, m)?)?;
    Ok(())
}
