//! Python bindings. Multi-indices cross the boundary as `{mode: order}`
//! dicts; complex fields come back as Python `complex` values.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::IntoPyObjectExt;

use sgks_core::analysis::{self, Trajectory};
use sgks_core::chaos::{self, MultiIndex};
use sgks_core::noise::{self, BrownianDriver, TimeBasis};
use sgks_core::oracle::{self, LangevinParams, Margin, MovingBoundary, TransformOptions};
use sgks_core::problem::{builtin_problem, Builtin, FieldKind, OracleKind, ProblemSpec};
use sgks_core::propagator::{self, Snapshots};
use sgks_core::runner;
use sgks_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Divergence { .. } | Error::DomainExhausted { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn index(map: BTreeMap<u32, u32>) -> PyResult<MultiIndex> {
    if map.contains_key(&0) {
        return Err(PyValueError::new_err("modes are numbered from 1"));
    }
    Ok(MultiIndex::from_pairs(map))
}

fn index_dict(a: &MultiIndex) -> BTreeMap<u32, u32> {
    a.iter().collect()
}

/// Normalized probabilists' Hermite polynomial.
#[pyfunction]
fn hermite(order: u32, x: f64) -> PyResult<f64> {
    chaos::hermite_normalized(order, x).map_err(err)
}

/// Wick polynomial `prod_i H_{alpha_i}(xi_i)`; `xi[0]` is mode 1.
#[pyfunction]
fn wick_eval(alpha: BTreeMap<u32, u32>, xi: Vec<f64>) -> PyResult<f64> {
    chaos::wick_eval(&index(alpha)?, &xi).map_err(err)
}

#[pyfunction]
fn product_coeff(
    theta: BTreeMap<u32, u32>,
    beta: BTreeMap<u32, u32>,
    p: BTreeMap<u32, u32>,
) -> PyResult<f64> {
    Ok(chaos::product_coeff(&index(theta)?, &index(beta)?, &index(p)?))
}

#[pyclass(name = "TruncationScheme", frozen)]
struct PyScheme {
    inner: chaos::TruncationScheme,
}

#[pymethods]
impl PyScheme {
    #[new]
    #[pyo3(signature = (gaussian_count, total_count, higher_order_cap = 1))]
    fn new(gaussian_count: u32, total_count: u32, higher_order_cap: u32) -> PyResult<Self> {
        chaos::TruncationScheme::new(gaussian_count, total_count, higher_order_cap)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn enumerate(&self) -> Vec<BTreeMap<u32, u32>> {
        self.inner.enumerate().iter().map(index_dict).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `(left, right, coeff)` triples of the quadratic term for `alpha`.
    fn convolution_terms(
        &self,
        alpha: BTreeMap<u32, u32>,
    ) -> PyResult<Vec<(BTreeMap<u32, u32>, BTreeMap<u32, u32>, f64)>> {
        Ok(chaos::convolution_terms(&index(alpha)?, &self.inner)
            .map_err(err)?
            .iter()
            .map(|t| (index_dict(&t.left), index_dict(&t.right), t.coeff))
            .collect())
    }

    fn __repr__(&self) -> String {
        let s = self.inner;
        format!(
            "TruncationScheme({}, {}, {})",
            s.gaussian_count, s.total_count, s.higher_order_cap
        )
    }
}

#[pyclass(name = "Problem")]
struct PyProblem {
    inner: ProblemSpec,
}

#[pymethods]
impl PyProblem {
    /// A builtin problem: linear_test, tp1, tp2, tp3 or tp4.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        let b: Builtin = name.parse().map_err(err)?;
        Ok(Self {
            inner: builtin_problem(b),
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        ProblemSpec::from_toml(text)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.grid.dx
    }

    #[setter]
    fn set_dx(&mut self, v: f64) {
        self.inner.grid.dx = v;
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.grid.dt
    }

    #[setter]
    fn set_dt(&mut self, v: f64) {
        self.inner.grid.dt = v;
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.grid.horizon
    }

    #[getter]
    fn is_complex(&self) -> bool {
        self.inner.field_kind == FieldKind::Complex
    }

    /// Constant forcing amplitude; Brownian boundary data follows it.
    fn set_sigma(&mut self, value: f64) {
        self.inner.set_constant_sigma(value);
    }

    fn nodes(&self) -> PyResult<Vec<f64>> {
        self.inner.grid.nodes().map_err(err)
    }

    fn stability_ratio(&self) -> f64 {
        self.inner.grid.stability_ratio(self.inner.nu)
    }

    /// Diagnostics for running with `oracle` (analytic, theorem3 or none).
    #[pyo3(signature = (oracle = "none"))]
    fn validate(&self, oracle: &str) -> PyResult<Vec<String>> {
        let o: OracleKind = oracle.parse().map_err(err)?;
        Ok(sgks_core::problem::validate(&self.inner, o)
            .iter()
            .map(|d| d.to_string())
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Problem('{}')", self.inner.name)
    }
}

#[pyclass(name = "Driver", frozen)]
struct PyDriver {
    inner: BrownianDriver,
}

#[pymethods]
impl PyDriver {
    #[getter]
    fn xi(&self) -> Vec<f64> {
        self.inner.xi().to_vec()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    fn brownian_at(&self, t: f64) -> PyResult<f64> {
        self.inner.brownian_at(t).map_err(err)
    }

    fn integrated_brownian(&self, t: f64) -> PyResult<f64> {
        self.inner.integrated_brownian(t).map_err(err)
    }

    fn path(&self, dt: f64) -> PyResult<Vec<f64>> {
        self.inner.path(dt).map_err(err)
    }

    fn truncated(&self, count: usize) -> Self {
        Self {
            inner: self.inner.truncated(count),
        }
    }
}

/// Path driven by `count` i.i.d. Gaussians drawn from `seed`.
#[pyfunction]
#[pyo3(signature = (seed, horizon = 3.0, count = 60))]
fn sample_driver(seed: u64, horizon: f64, count: usize) -> PyResult<PyDriver> {
    let basis = TimeBasis::new(horizon, count).map_err(err)?;
    Ok(PyDriver {
        inner: noise::sample_driver(seed, basis),
    })
}

enum Coefficients {
    Real(propagator::ChaosField<f64>),
    Complex(propagator::ChaosField<Complex64>),
}

#[pyclass(name = "ChaosField", frozen)]
struct PyField {
    inner: Coefficients,
}

#[pymethods]
impl PyField {
    #[getter]
    fn time(&self) -> f64 {
        match &self.inner {
            Coefficients::Real(f) => f.time,
            Coefficients::Complex(f) => f.time,
        }
    }

    #[getter]
    fn indices(&self) -> Vec<BTreeMap<u32, u32>> {
        let idx = match &self.inner {
            Coefficients::Real(f) => f.indices(),
            Coefficients::Complex(f) => f.indices(),
        };
        idx.iter().map(index_dict).collect()
    }

    /// One list of nodal values per index.
    fn coefficients(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        match &self.inner {
            Coefficients::Real(f) => f.coefficients().to_vec().into_py_any(py),
            Coefficients::Complex(f) => f.coefficients().to_vec().into_py_any(py),
        }
    }

    /// `sum_alpha u_alpha T_alpha(xi)` at every node.
    fn reconstruct(&self, py: Python<'_>, xi: Vec<f64>) -> PyResult<Py<PyAny>> {
        match &self.inner {
            Coefficients::Real(f) => analysis::reconstruct(f, &xi).map_err(err)?.into_py_any(py),
            Coefficients::Complex(f) => {
                analysis::reconstruct(f, &xi).map_err(err)?.into_py_any(py)
            }
        }
    }

    /// `(mean, variance)` at every node.
    fn moments(&self, py: Python<'_>) -> PyResult<(Py<PyAny>, Vec<f64>)> {
        match &self.inner {
            Coefficients::Real(f) => {
                let (m, v) = analysis::moments(f);
                Ok((m.into_py_any(py)?, v))
            }
            Coefficients::Complex(f) => {
                let (m, v) = analysis::moments(f);
                Ok((m.into_py_any(py)?, v))
            }
        }
    }
}

/// Marches the chaos coefficients and returns the fields at `steps`
/// (default: the final level).
#[pyfunction]
#[pyo3(signature = (problem, scheme, steps = None))]
fn solve(
    py: Python<'_>,
    problem: PyRef<'_, PyProblem>,
    scheme: PyRef<'_, PyScheme>,
    steps: Option<Vec<usize>>,
) -> PyResult<Vec<PyField>> {
    let spec = problem.inner.clone();
    let scheme = scheme.inner;
    let at = match steps {
        Some(s) => s,
        None => vec![spec.grid.steps().map_err(err)?],
    };
    let basis = TimeBasis::new(spec.grid.horizon, scheme.mode_count()).map_err(err)?;
    let snaps = Snapshots::Steps(at);
    py.detach(move || match spec.field_kind {
        FieldKind::Real => propagator::solve::<f64>(&spec, &scheme, basis, None, &snaps)
            .map(|v| v.into_iter().map(|f| PyField { inner: Coefficients::Real(f) }).collect()),
        FieldKind::Complex => propagator::solve::<Complex64>(&spec, &scheme, basis, None, &snaps)
            .map(|v| {
                v.into_iter()
                    .map(|f| PyField {
                        inner: Coefficients::Complex(f),
                    })
                    .collect()
            }),
    })
    .map_err(err)
}

/// Closed-form Langevin solution `V(t_n)` for `dV = lambda V dt + s dW`.
#[pyfunction]
#[pyo3(signature = (kappa, eta, nu, k, driver, dt, v0 = Complex64::new(1.0, 0.0), forcing = 1.0))]
#[allow(clippy::too_many_arguments)]
fn langevin_semianalytic(
    kappa: f64,
    eta: f64,
    nu: f64,
    k: i32,
    driver: PyRef<'_, PyDriver>,
    dt: f64,
    v0: Complex64,
    forcing: f64,
) -> PyResult<Vec<Complex64>> {
    let mut p = LangevinParams::new(kappa, eta, nu, k, v0);
    p.forcing = forcing;
    oracle::langevin_semianalytic(&p, &driver.inner, dt).map_err(err)
}

/// Chaos coefficients of the Langevin solution: `(times, mean, modes)`.
#[pyfunction]
#[pyo3(signature = (kappa, eta, nu, k, count, dt, horizon = 3.0, v0 = Complex64::new(1.0, 0.0)))]
#[allow(clippy::too_many_arguments)]
fn langevin_wce(
    kappa: f64,
    eta: f64,
    nu: f64,
    k: i32,
    count: usize,
    dt: f64,
    horizon: f64,
    v0: Complex64,
) -> PyResult<(Vec<f64>, Vec<Complex64>, Vec<Vec<Complex64>>)> {
    let p = LangevinParams::new(kappa, eta, nu, k, v0);
    let basis = TimeBasis::new(horizon, count).map_err(err)?;
    let w = oracle::langevin_wce(&p, basis, dt).map_err(err)?;
    Ok((w.times, w.mean, w.modes))
}

/// Change-of-variables reference for constant sigma with Dirichlet data.
/// Returns a dict with `times`, `u`, `chi`, `shift`, `lift`, `margin_cells`.
#[pyfunction]
#[pyo3(signature = (problem, driver, margin_cells = None, interp = false))]
fn transform_solve<'py>(
    py: Python<'py>,
    problem: PyRef<'_, PyProblem>,
    driver: PyRef<'_, PyDriver>,
    margin_cells: Option<usize>,
    interp: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = TransformOptions {
        margin: margin_cells.map_or(Margin::Auto, Margin::Cells),
        boundary: if interp {
            MovingBoundary::Interp
        } else {
            MovingBoundary::Clamp
        },
    };
    let sol = oracle::transform_solve(&problem.inner, &driver.inner, opts).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("times", sol.times)?;
    d.set_item("u", sol.u)?;
    d.set_item("chi", sol.chi)?;
    d.set_item("shift", sol.shift)?;
    d.set_item("lift", sol.lift)?;
    d.set_item("margin_cells", sol.margin_cells)?;
    Ok(d)
}

fn series_dict<'py>(py: Python<'py>, e: &analysis::ErrorSeries) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("times", e.times.clone())?;
    d.set_item("abs", e.abs_diff.clone())?;
    d.set_item("rel", e.rel_diff.clone())?;
    d.set_item("slope", e.slope_fit.map(|f| f.slope))?;
    d.set_item("r_squared", e.slope_fit.map(|f| f.r_squared))?;
    d.set_item("max_rel", e.max_rel())?;
    d.set_item("flagged", e.flagged)?;
    Ok(d)
}

/// Absolute and relative differences between two trajectories `[n][k]`.
#[pyfunction]
fn error_series<'py>(
    py: Python<'py>,
    times: Vec<f64>,
    numeric: Vec<Vec<Complex64>>,
    reference: Vec<Vec<Complex64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let a = Trajectory::new(times.clone(), numeric).map_err(err)?;
    let b = Trajectory::new(times, reference).map_err(err)?;
    let e = analysis::error_series(&a, &b).map_err(err)?;
    series_dict(py, &e)
}

/// Chaos solution for one seed compared with a reference (analytic,
/// theorem3 or none). Returns the error dict, or `None` without reference.
#[pyfunction]
#[pyo3(signature = (problem, scheme, seed, oracle = "theorem3"))]
fn realize<'py>(
    py: Python<'py>,
    problem: PyRef<'_, PyProblem>,
    scheme: PyRef<'_, PyScheme>,
    seed: u64,
    oracle: &str,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let o: OracleKind = oracle.parse().map_err(err)?;
    let spec = problem.inner.clone();
    let scheme = scheme.inner;
    let r = py
        .detach(move || runner::realize(&spec, &scheme, o, seed))
        .map_err(err)?;
    r.errors.as_ref().map(|e| series_dict(py, e)).transpose()
}

/// Terminal absolute error of the linear problem per truncation order,
/// one row per seed.
#[pyfunction]
fn truncation_decay(
    problem: PyRef<'_, PyProblem>,
    orders: Vec<u32>,
    seeds: Vec<u64>,
) -> PyResult<Vec<Vec<f64>>> {
    analysis::truncation_decay(&problem.inner, &orders, &seeds).map_err(err)
}

#[pymodule]
#[pyo3(name = "sgks")]
fn sgks_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScheme>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyDriver>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(hermite, m)?)?;
    m.add_function(wrap_pyfunction!(wick_eval, m)?)?;
    m.add_function(wrap_pyfunction!(product_coeff, m)?)?;
    m.add_function(wrap_pyfunction!(sample_driver, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(langevin_semianalytic, m)?)?;
    m.add_function(wrap_pyfunction!(langevin_wce, m)?)?;
    m.add_function(wrap_pyfunction!(transform_solve, m)?)?;
    m.add_function(wrap_pyfunction!(error_series, m)?)?;
    m.add_function(wrap_pyfunction!(realize, m)?)?;
    m.add_function(wrap_pyfunction!(truncation_decay, m)?)?;
    Ok(())
}
