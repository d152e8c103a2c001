//! Line-oriented `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::coeffs::CoefficientFamily;
use crate::energy::ProblemParams;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::solvers::SolverOptions;

/// Accepted keys and their defaults, as shown by `--help`.
pub const KEYS_HELP: &str = "\
Configuration keys (`key = value`, `#` starts a comment):
  grid.nx                 interior nodes in x (required)
  grid.ny                 interior nodes in y (default grid.nx)
  grid.lx, grid.ly        side lengths (default 1)
  params.p                exponent, p > 2 (required)
  params.beta             coupling (required)
  params.lambda1/lambda2  linear coefficients (default 0)
  params.gamma            growth constant in (0, p-2) (default (p-2)/2)
  familyN.kind            identity | example | polynomial (default example), N = 1, 2
  familyN.gamma           example exponent / declared growth (default params.gamma)
  familyN.nu, familyN.c0  ellipticity and bound constants (polynomial; default nu = 1)
  familyN.coeffs          polynomial coefficients c0, c1, ... of s^0, s^2, ...
  solver.tol              Euler residual target (default 1e-8)
  solver.nehari_tol       fiber projection tolerance (default 1e-10)
  solver.restarts         random starts (default 2)
  solver.seed             RNG seed (default 0)
  solver.max_iter         descent iterations (default 3000)
  solver.max_refine       Newton polish steps (default 30)
  solver.scan_min/scan_max/scan_n  fiber scan box (default 1e-3, 1e3, 64)
  certify.s_min/s_max     certification range (default -10, 10)
  certify.samples         certification samples (default 10000)
  eigen.tol, eigen.max_iter  eigen solver (default 1e-10, 500)
  sweep.betas             comma-separated beta list
  output.dir              output directory (default out)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Identity,
    Example,
    Polynomial,
}

impl FamilyKind {
    fn name(&self) -> &'static str {
        match self {
            FamilyKind::Identity => "identity",
            FamilyKind::Example => "example",
            FamilyKind::Polynomial => "polynomial",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub gamma: Option<f64>,
    pub nu: Option<f64>,
    pub c0: Option<f64>,
    pub coeffs: Vec<f64>,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self { kind: FamilyKind::Example, gamma: None, nu: None, c0: None, coeffs: Vec::new() }
    }
}

impl FamilySpec {
    pub fn build(&self, params_gamma: f64) -> Result<CoefficientFamily> {
        let gamma = self.gamma.unwrap_or(params_gamma);
        let fam = match self.kind {
            FamilyKind::Identity => CoefficientFamily::identity(gamma),
            FamilyKind::Example => CoefficientFamily::example(gamma),
            FamilyKind::Polynomial => {
                let c0 = self.c0.ok_or_else(|| Error::Validation {
                    key: "c0".into(),
                    reason: "polynomial families need an explicit c0".into(),
                })?;
                CoefficientFamily::even_polynomial(self.coeffs.clone(), self.nu.unwrap_or(1.0), c0, gamma)
            }
        };
        fam.validate()?;
        Ok(fam)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub s_min: f64,
    pub s_max: f64,
    pub samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { s_min: -10.0, s_max: 10.0, samples: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: ProblemParams,
    pub families: [FamilySpec; 2],
    pub solver: SolverOptions,
    pub certify: CertifyOptions,
    pub betas: Vec<f64>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn family(&self, i: usize) -> Result<CoefficientFamily> {
        self.families[i].build(self.params.gamma).map_err(|e| match e {
            Error::Validation { key, reason } => Error::Validation { key: format!("family{}.{key}", i + 1), reason },
            other => Error::Validation { key: format!("family{}", i + 1), reason: other.to_string() },
        })
    }
}

fn parse_f64(key: &str, v: &str, line: usize) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Parse { line, message: format!("`{key}`: expected a number, found `{v}`") })
}

fn parse_usize(key: &str, v: &str, line: usize) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::Parse { line, message: format!("`{key}`: expected a non-negative integer, found `{v}`") })
}

fn parse_list(key: &str, v: &str, line: usize) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_f64(key, x.trim(), line)).collect()
}

fn invalid(key: &str, reason: impl Into<String>) -> Error {
    Error::Validation { key: key.into(), reason: reason.into() }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut nx = None;
    let mut ny = None;
    let (mut lx, mut ly) = (1.0, 1.0);
    let mut p = None;
    let mut beta = None;
    let (mut lambda1, mut lambda2) = (0.0, 0.0);
    let mut gamma = None;
    let mut families = [FamilySpec::default(), FamilySpec::default()];
    let mut solver = SolverOptions::default();
    let mut certify = CertifyOptions::default();
    let mut betas = Vec::new();
    let mut output_dir = PathBuf::from("out");
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, message: format!("expected `key = value`, found `{content}`") })?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse { line, message: format!("duplicate key `{key}`") });
        }
        let num = |v: &str| parse_f64(key, v, line);
        match key {
            "grid.nx" => nx = Some(parse_usize(key, value, line)?),
            "grid.ny" => ny = Some(parse_usize(key, value, line)?),
            "grid.lx" => lx = num(value)?,
            "grid.ly" => ly = num(value)?,
            "params.p" => p = Some(num(value)?),
            "params.beta" => beta = Some(num(value)?),
            "params.lambda1" => lambda1 = num(value)?,
            "params.lambda2" => lambda2 = num(value)?,
            "params.gamma" => gamma = Some(num(value)?),
            "solver.tol" => solver.tol = num(value)?,
            "solver.nehari_tol" => solver.projection.tol = num(value)?,
            "solver.restarts" => solver.restarts = parse_usize(key, value, line)?,
            "solver.seed" => {
                solver.seed = value
                    .parse()
                    .map_err(|_| Error::Parse { line, message: format!("`{key}`: expected an unsigned integer") })?
            }
            "solver.max_iter" => solver.max_iter = parse_usize(key, value, line)?,
            "solver.max_refine" => solver.max_refine = parse_usize(key, value, line)?,
            "solver.scan_min" => solver.projection.t_min = num(value)?,
            "solver.scan_max" => solver.projection.t_max = num(value)?,
            "solver.scan_n" => solver.projection.scan_n = parse_usize(key, value, line)?,
            "certify.s_min" => certify.s_min = num(value)?,
            "certify.s_max" => certify.s_max = num(value)?,
            "certify.samples" => certify.samples = parse_usize(key, value, line)?,
            "eigen.tol" => solver.eigen_tol = num(value)?,
            "eigen.max_iter" => solver.eigen_max_iter = parse_usize(key, value, line)?,
            "sweep.betas" => betas = parse_list(key, value, line)?,
            "output.dir" => output_dir = PathBuf::from(value),
            _ => {
                let fam = match key.split_once('.') {
                    Some(("family1", f)) => Some((0, f)),
                    Some(("family2", f)) => Some((1, f)),
                    _ => None,
                };
                let Some((i, field)) = fam else {
                    return Err(Error::Parse { line, message: format!("unknown key `{key}`") });
                };
                let spec = &mut families[i];
                match field {
                    "kind" => {
                        spec.kind = match value {
                            "identity" => FamilyKind::Identity,
                            "example" => FamilyKind::Example,
                            "polynomial" => FamilyKind::Polynomial,
                            _ => return Err(invalid(key, format!("unknown family kind `{value}`"))),
                        }
                    }
                    "gamma" => spec.gamma = Some(num(value)?),
                    "nu" => spec.nu = Some(num(value)?),
                    "c0" => spec.c0 = Some(num(value)?),
                    "coeffs" => spec.coeffs = parse_list(key, value, line)?,
                    _ => return Err(Error::Parse { line, message: format!("unknown key `{key}`") }),
                }
            }
        }
    }

    let nx = nx.ok_or_else(|| invalid("grid.nx", "missing"))?;
    let grid = GridSpec::new(nx, ny.unwrap_or(nx), lx, ly);
    grid.validate().map_err(|e| invalid("grid", e.to_string()))?;
    let p = p.ok_or_else(|| invalid("params.p", "missing"))?;
    if !(p > 2.0 && p.is_finite()) {
        return Err(invalid("params.p", format!("p > 2 required, got {p}")));
    }
    let beta = beta.ok_or_else(|| invalid("params.beta", "missing"))?;
    let gamma = gamma.unwrap_or(0.5 * (p - 2.0));
    if !(gamma > 0.0 && gamma < p - 2.0) {
        return Err(invalid("params.gamma", format!("gamma must lie in (0, p-2) = (0, {}), got {gamma}", p - 2.0)));
    }
    let params = ProblemParams::new(lambda1, lambda2, beta, p, gamma);
    params.validate().map_err(|e| invalid("params", e.to_string()))?;
    for (key, v) in [("solver.tol", solver.tol), ("solver.nehari_tol", solver.projection.tol), ("eigen.tol", solver.eigen_tol)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(key, "must be positive"));
        }
    }
    let pr = &solver.projection;
    if !(pr.t_min > 0.0 && pr.t_min < pr.t_max && pr.t_max.is_finite()) {
        return Err(invalid("solver.scan_min", "need 0 < scan_min < scan_max"));
    }
    if pr.scan_n < 3 {
        return Err(invalid("solver.scan_n", "need at least 3 samples"));
    }
    if !(certify.s_min < certify.s_max && certify.s_min.is_finite() && certify.s_max.is_finite()) {
        return Err(invalid("certify.s_min", "need s_min < s_max"));
    }
    if certify.samples < 100 {
        return Err(invalid("certify.samples", "need at least 100 samples"));
    }
    if betas.iter().any(|b| !b.is_finite()) {
        return Err(invalid("sweep.betas", "betas must be finite"));
    }
    let cfg = RunConfig { grid, params, families, solver, certify, betas, output_dir };
    cfg.family(0)?;
    cfg.family(1)?;
    Ok(cfg)
}

/// Canonical text form; [`parse_config`] reads it back unchanged.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let g = &cfg.grid;
    let pr = &cfg.params;
    let so = &cfg.solver;
    let _ = writeln!(s, "grid.nx = {}\ngrid.ny = {}\ngrid.lx = {:?}\ngrid.ly = {:?}", g.nx, g.ny, g.lx, g.ly);
    let _ = writeln!(
        s,
        "params.p = {:?}\nparams.beta = {:?}\nparams.lambda1 = {:?}\nparams.lambda2 = {:?}\nparams.gamma = {:?}",
        pr.p, pr.beta, pr.lambda1, pr.lambda2, pr.gamma
    );
    for (i, f) in cfg.families.iter().enumerate() {
        let n = i + 1;
        let _ = writeln!(s, "family{n}.kind = {}", f.kind.name());
        if let Some(v) = f.gamma {
            let _ = writeln!(s, "family{n}.gamma = {v:?}");
        }
        if let Some(v) = f.nu {
            let _ = writeln!(s, "family{n}.nu = {v:?}");
        }
        if let Some(v) = f.c0 {
            let _ = writeln!(s, "family{n}.c0 = {v:?}");
        }
        if !f.coeffs.is_empty() {
            let _ = writeln!(s, "family{n}.coeffs = {}", join(&f.coeffs));
        }
    }
    let _ = writeln!(
        s,
        "solver.tol = {:?}\nsolver.nehari_tol = {:?}\nsolver.restarts = {}\nsolver.seed = {}\nsolver.max_iter = {}\nsolver.max_refine = {}",
        so.tol, so.projection.tol, so.restarts, so.seed, so.max_iter, so.max_refine
    );
    let _ = writeln!(
        s,
        "solver.scan_min = {:?}\nsolver.scan_max = {:?}\nsolver.scan_n = {}",
        so.projection.t_min, so.projection.t_max, so.projection.scan_n
    );
    let c = &cfg.certify;
    let _ = writeln!(s, "certify.s_min = {:?}\ncertify.s_max = {:?}\ncertify.samples = {}", c.s_min, c.s_max, c.samples);
    let _ = writeln!(s, "eigen.tol = {:?}\neigen.max_iter = {}", so.eigen_tol, so.eigen_max_iter);
    if !cfg.betas.is_empty() {
        let _ = writeln!(s, "sweep.betas = {}", join(&cfg.betas));
    }
    let _ = writeln!(s, "output.dir = {}", cfg.output_dir.display());
    s
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}
