//! Python bindings. Fields cross the boundary as flat lists in row-major node
//! order (`k = j·nx + i`).

use coupled_nehari::grid::{ScalarField, StatePair};
use coupled_nehari::solvers::{SolveReport, SolverOptions};
use coupled_nehari::{self as core, CoefficientFamily, Error, GridSpec, ProblemParams, ProjectionOptions, ProjectionStatus, Verdict};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NoConvergence { .. } | Error::NoFullyNontrivialCandidate | Error::NotProjectable(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn pair(u1: Vec<f64>, u2: Vec<f64>) -> StatePair {
    StatePair::new(ScalarField::from_vec(u1), ScalarField::from_vec(u2))
}

fn solver_options(tol: f64, seed: u64, restarts: usize) -> SolverOptions {
    SolverOptions { tol, seed, restarts, ..SolverOptions::default() }
}

fn report_dict<'py>(py: Python<'py>, r: &SolveReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("energy", r.energy)?;
    d.set_item("L1", r.l1)?;
    d.set_item("L2", r.l2)?;
    d.set_item("euler_residual", r.euler_residual_norm)?;
    d.set_item("nehari_residual", (r.nehari_residual.r1, r.nehari_residual.r2))?;
    d.set_item("fully_nontrivial", r.fully_nontrivial)?;
    d.set_item("nonnegative", r.nonnegative)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("regime", r.regime.label())?;
    d.set_item("warnings", r.warnings.clone())?;
    d.set_item("below_scalar_levels", r.below_scalar_levels)?;
    Ok(d)
}

/// Coefficient profile `𝒜(s)` with its constants `ν`, `C0`, `γ`.
#[pyclass(name = "Family", module = "nehari", frozen, from_py_object)]
#[derive(Clone)]
struct PyFamily {
    inner: CoefficientFamily,
}

#[pymethods]
impl PyFamily {
    #[staticmethod]
    #[pyo3(signature = (gamma = 1.0))]
    fn identity(gamma: f64) -> Self {
        Self { inner: CoefficientFamily::identity(gamma) }
    }

    /// `𝒜(s) = 1 + |s|^γ / (1 + |s|^γ)`
    #[staticmethod]
    #[pyo3(signature = (gamma = 1.0))]
    fn example(gamma: f64) -> Self {
        Self { inner: CoefficientFamily::example(gamma) }
    }

    /// `𝒜(s) = Σ_k coeffs[k] s^{2k}`
    #[staticmethod]
    #[pyo3(signature = (coeffs, c0, gamma, nu = 1.0))]
    fn polynomial(coeffs: Vec<f64>, c0: f64, gamma: f64, nu: f64) -> Self {
        Self { inner: CoefficientFamily::even_polynomial(coeffs, nu, c0, gamma) }
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind_name().to_string()
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu
    }

    #[getter]
    fn c0(&self) -> f64 {
        self.inner.c0
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    fn a(&self, s: f64) -> f64 {
        self.inner.eval_a(s)
    }

    fn da(&self, s: f64) -> f64 {
        self.inner.eval_da(s)
    }

    /// Checks the hypotheses on equispaced samples. Returns
    /// `[(condition, verdict, witness_s or None)]`.
    #[pyo3(signature = (p, s_min = -10.0, s_max = 10.0, samples = 10000))]
    fn certify(&self, p: f64, s_min: f64, s_max: f64, samples: usize) -> PyResult<Vec<(String, String, Option<f64>)>> {
        let report = core::certify(&self.inner, p, (s_min, s_max), samples).map_err(to_py)?;
        Ok(report
            .rows
            .iter()
            .map(|(c, v)| {
                let (verdict, witness) = match v {
                    Verdict::Pass => ("pass", None),
                    Verdict::PassDegenerate => ("pass(degenerate)", None),
                    Verdict::Fail { witness_s } => ("fail", Some(*witness_s)),
                };
                (c.label().to_string(), verdict.to_string(), witness)
            })
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Family({}, nu={}, c0={}, gamma={})", self.inner.kind_name(), self.inner.nu, self.inner.c0, self.inner.gamma)
    }
}

/// One instance of the coupled system on an `nx × ny` interior grid.
#[pyclass(name = "Problem", module = "nehari", frozen)]
struct PyProblem {
    inner: core::Problem,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (nx, p, beta, ny = None, lx = 1.0, ly = 1.0, lambda1 = 0.0, lambda2 = 0.0, gamma = None, family1 = None, family2 = None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        nx: usize,
        p: f64,
        beta: f64,
        ny: Option<usize>,
        lx: f64,
        ly: f64,
        lambda1: f64,
        lambda2: f64,
        gamma: Option<f64>,
        family1: Option<PyFamily>,
        family2: Option<PyFamily>,
    ) -> PyResult<Self> {
        let gamma = gamma.unwrap_or(0.5 * (p - 2.0));
        let fam = |f: Option<PyFamily>| f.map(|f| f.inner).unwrap_or_else(|| CoefficientFamily::example(gamma));
        let inner = core::Problem::new(
            GridSpec::new(nx, ny.unwrap_or(nx), lx, ly),
            ProblemParams::new(lambda1, lambda2, beta, p, gamma),
            fam(family1),
            fam(family2),
        )
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.grid.nx(), self.inner.grid.ny())
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.params.beta
    }

    fn with_beta(&self, beta: f64) -> Self {
        Self { inner: self.inner.with_beta(beta) }
    }

    /// Interior node coordinates in storage order.
    fn nodes(&self) -> Vec<(f64, f64)> {
        let g = &self.inner.grid;
        (0..g.ny()).flat_map(|j| (0..g.nx()).map(move |i| g.node_coords(i, j))).collect()
    }

    fn total_energy(&self, u1: Vec<f64>, u2: Vec<f64>) -> PyResult<f64> {
        self.inner.total_energy(&pair(u1, u2)).map_err(to_py)
    }

    fn euler_gradient(&self, u1: Vec<f64>, u2: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let g = self.inner.euler_gradient(&pair(u1, u2)).map_err(to_py)?;
        Ok((g.u1.into_vec(), g.u2.into_vec()))
    }

    fn nehari_residual(&self, u1: Vec<f64>, u2: Vec<f64>) -> PyResult<(f64, f64)> {
        let r = self.inner.nehari_residual(&pair(u1, u2)).map_err(to_py)?;
        Ok((r.r1, r.r2))
    }

    /// `(mu1, phi1)` of the grid Laplacian.
    #[pyo3(signature = (tol = 1e-10, max_iter = 500))]
    fn eigen(&self, tol: f64, max_iter: usize) -> PyResult<(f64, Vec<f64>)> {
        let e = core::principal_eigenpair(&self.inner.grid, tol, max_iter).map_err(to_py)?;
        Ok((e.mu, e.phi.into_vec()))
    }

    /// Rescales each component onto the Nehari set. Returns `t`, the
    /// projected state, its energy and whether an interior maximum exists.
    fn project<'py>(&self, py: Python<'py>, u1: Vec<f64>, u2: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let r = core::project_to_nehari(&self.inner, &pair(u1, u2), &ProjectionOptions::default()).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("t", (r.t.t1, r.t.t2))?;
        d.set_item("projectable", r.status == ProjectionStatus::InteriorMax)?;
        d.set_item("energy", r.energy)?;
        d.set_item("residual", (r.residual.r1, r.residual.r2))?;
        d.set_item("u1", r.projected.u1.into_vec())?;
        d.set_item("u2", r.projected.u2.into_vec())?;
        Ok(d)
    }

    /// Ground state of component `component` (1 or 2) without coupling.
    #[pyo3(signature = (component, tol = 1e-8, seed = 0, restarts = 2))]
    fn scalar_ground_state<'py>(
        &self,
        py: Python<'py>,
        component: usize,
        tol: f64,
        seed: u64,
        restarts: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        if !(1..=2).contains(&component) {
            return Err(PyValueError::new_err("component must be 1 or 2"));
        }
        let opts = solver_options(tol, seed, restarts);
        let s = py
            .detach(|| core::scalar_ground_state(&self.inner, component - 1, &opts))
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("level", s.level)?;
        d.set_item("euler_residual", s.report.euler_residual_norm)?;
        d.set_item("field", s.field.into_vec())?;
        Ok(d)
    }

    /// Least energy solution; the solver is chosen by the sign of `beta`.
    #[pyo3(signature = (tol = 1e-8, seed = 0, restarts = 2))]
    fn solve<'py>(&self, py: Python<'py>, tol: f64, seed: u64, restarts: usize) -> PyResult<Bound<'py, PyDict>> {
        let opts = solver_options(tol, seed, restarts);
        let sol = py.detach(|| core::solve_system(&self.inner, &opts)).map_err(to_py)?;
        let d = report_dict(py, &sol.report)?;
        d.set_item("u1", sol.state.u1.into_vec())?;
        d.set_item("u2", sol.state.u2.into_vec())?;
        Ok(d)
    }

    /// One solve per `beta`, warm-started in order. Failed rows carry an
    /// `error` entry instead of the report fields.
    #[pyo3(signature = (betas, tol = 1e-8, seed = 0, restarts = 2))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        betas: Vec<f64>,
        tol: f64,
        seed: u64,
        restarts: usize,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let opts = solver_options(tol, seed, restarts);
        let rows = py.detach(|| core::beta_sweep(&betas, &self.inner, &opts)).map_err(to_py)?;
        rows.iter()
            .map(|row| {
                let d = match &row.outcome {
                    Ok(r) => report_dict(py, r)?,
                    Err(msg) => {
                        let d = PyDict::new(py);
                        d.set_item("error", msg)?;
                        d
                    }
                };
                d.set_item("beta", row.beta)?;
                Ok(d)
            })
            .collect()
    }
}

#[pymodule]
fn nehari(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_class::<PyProblem>()?;
    Ok(())
}
