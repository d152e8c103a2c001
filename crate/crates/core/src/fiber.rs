//! The fibering map `h_u(t) = E(t₁u₁, t₂u₂)` and the projection of a state
//! onto the Nehari set along its fiber.
//!
//! [`FiberMap`] caches the cell samples of a fixed state so that `h_u`, its
//! gradient and Hessian cost one pass over the cells per component (and
//! nothing at all for `𝒜 ≡ 1`). Only the diffusion block depends on `t`
//! non-polynomially, and it depends on each `t_i` separately:
//!
//! ```text
//! h(t) = Σ_i [ t_i²/2 (S_i(t_i) − λ_i m_i) − κ t_i^p P_i / p ] − (2β/p) (t₁t₂)^{p/2} C
//! S_i(τ) = ∫ 𝒜_i(τ u_i) |∇u_i|²
//! ```

use crate::coeffs::CoefficientFamily;
use crate::energy::{NehariResidual, Problem};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, StatePair};

/// A point `(t₁, t₂)` of the open positive quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberPoint {
    pub t1: f64,
    pub t2: f64,
}

impl FiberPoint {
    pub fn new(t1: f64, t2: f64) -> Self {
        Self { t1, t2 }
    }
    pub fn ones() -> Self {
        Self::new(1.0, 1.0)
    }
    pub fn is_valid(&self) -> bool {
        self.t1 > 0.0 && self.t2 > 0.0 && self.t1.is_finite() && self.t2.is_finite()
    }
    pub fn get(&self, i: usize) -> f64 {
        if i == 0 {
            self.t1
        } else {
            self.t2
        }
    }
    pub fn distance(&self, other: &FiberPoint) -> f64 {
        (self.t1 - other.t1).hypot(self.t2 - other.t2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionStatus {
    InteriorMax,
    NotProjectable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub t: FiberPoint,
    pub projected: StatePair,
    pub residual: NehariResidual,
    pub energy: f64,
    pub status: ProjectionStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub t_min: f64,
    pub t_max: f64,
    /// Scan samples per axis.
    pub scan_n: usize,
    /// Factor by which the box grows once when the scan maximum sits on its edge.
    pub enlarge: f64,
    /// Relative tolerance on the Nehari residuals `t_i ∂_i h`, scaled by `1 + |h|`.
    pub tol: f64,
    pub max_newton: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { t_min: 1e-3, t_max: 1e3, scan_n: 64, enlarge: 10.0, tol: 1e-10, max_newton: 100 }
    }
}

#[derive(Debug, Clone)]
struct ComponentFiber {
    family: CoefficientFamily,
    value: Vec<f64>,
    gsq: Vec<f64>,
    w: f64,
    lambda: f64,
    dirichlet: f64,
    mass: f64,
    power: f64,
}

impl ComponentFiber {
    fn new(problem: &Problem, field: &ScalarField, i: usize) -> Self {
        let grid = &problem.grid;
        let cells = grid.cell_samples(field);
        let p = problem.params.p;
        let w = grid.cell_area();
        let mut value = Vec::with_capacity(cells.len());
        let mut gsq = Vec::with_capacity(cells.len());
        let (mut di, mut ma, mut po) = (0.0, 0.0, 0.0);
        for s in &cells {
            let g2 = s.grad_sq();
            di += g2;
            ma += s.value * s.value;
            po += crate::energy::abs_pow(s.value, p);
            if g2 != 0.0 {
                value.push(s.value);
                gsq.push(g2);
            }
        }
        Self {
            family: problem.family(i).clone(),
            value,
            gsq,
            w,
            lambda: problem.params.lambda(i),
            dirichlet: di * w,
            mass: ma * w,
            power: po * w,
        }
    }

    /// `(S(τ), D(τ), D′(τ))` with `S = ∫𝒜(τu)|∇u|²`, `D = ∫𝒜′(τu)|∇u|²u`.
    fn diffusion(&self, tau: f64, derivatives: u8) -> (f64, f64, f64) {
        if self.family.is_constant() {
            return (self.dirichlet, 0.0, 0.0);
        }
        let (mut s, mut d, mut d2) = (0.0, 0.0, 0.0);
        for (&v, &g) in self.value.iter().zip(&self.gsq) {
            let x = tau * v;
            s += self.family.eval_a(x) * g;
            if derivatives >= 1 {
                d += self.family.eval_da(x) * g * v;
            }
            if derivatives >= 2 {
                d2 += self.family.eval_d2a(x) * g * v * v;
            }
        }
        (s * self.w, d * self.w, d2 * self.w)
    }

    fn q(&self, t: f64, p: f64, kappa: f64) -> f64 {
        let (s, _, _) = self.diffusion(t, 0);
        0.5 * t * t * (s - self.lambda * self.mass) - kappa * t.powf(p) * self.power / p
    }

    fn dq(&self, t: f64, p: f64, kappa: f64) -> f64 {
        let (s, d, _) = self.diffusion(t, 1);
        t * (s - self.lambda * self.mass) + 0.5 * t * t * d - kappa * t.powf(p - 1.0) * self.power
    }

    fn dq_d2q(&self, t: f64, p: f64, kappa: f64) -> (f64, f64) {
        let (s, d, d2) = self.diffusion(t, 2);
        let a = s - self.lambda * self.mass;
        (
            t * a + 0.5 * t * t * d - kappa * t.powf(p - 1.0) * self.power,
            a + 2.0 * t * d + 0.5 * t * t * d2 - kappa * (p - 1.0) * t.powf(p - 2.0) * self.power,
        )
    }
}

/// Cached fiber data of one state.
#[derive(Debug, Clone)]
pub struct FiberMap {
    comps: [ComponentFiber; 2],
    cross: f64,
    p: f64,
    beta: f64,
    kappa: f64,
}

impl FiberMap {
    pub fn new(problem: &Problem, u: &StatePair) -> Result<Self> {
        Self::with_kappa(problem, u, 1.0)
    }

    /// Fiber map with the self-interaction terms `∫|u_i|^p` weighted by `kappa`.
    pub fn with_kappa(problem: &Problem, u: &StatePair, kappa: f64) -> Result<Self> {
        problem.grid.check_pair(u)?;
        let c1 = ComponentFiber::new(problem, &u.u1, 0);
        let c2 = ComponentFiber::new(problem, &u.u2, 1);
        let m = problem.moments(u)?;
        Ok(Self { comps: [c1, c2], cross: m.cross, p: problem.params.p, beta: problem.params.beta, kappa })
    }

    /// `∫|u_i|^p`
    pub fn power(&self, i: usize) -> f64 {
        self.comps[i].power
    }
    /// `∫|u_1|^{p/2}|u_2|^{p/2}`
    pub fn cross(&self) -> f64 {
        self.cross
    }

    fn coupling(&self, t: FiberPoint) -> f64 {
        let h = 0.5 * self.p;
        -2.0 * self.beta / self.p * (t.t1 * t.t2).powf(h) * self.cross
    }

    pub fn value(&self, t: FiberPoint) -> f64 {
        self.comps[0].q(t.t1, self.p, self.kappa) + self.comps[1].q(t.t2, self.p, self.kappa) + self.coupling(t)
    }

    pub fn gradient(&self, t: FiberPoint) -> (f64, f64) {
        let h = 0.5 * self.p;
        let bc = self.beta * self.cross;
        (
            self.comps[0].dq(t.t1, self.p, self.kappa) - bc * t.t1.powf(h - 1.0) * t.t2.powf(h),
            self.comps[1].dq(t.t2, self.p, self.kappa) - bc * t.t2.powf(h - 1.0) * t.t1.powf(h),
        )
    }

    /// Gradient and Hessian `[[h11, h12], [h12, h22]]`.
    pub fn gradient_hessian(&self, t: FiberPoint) -> ((f64, f64), [f64; 3]) {
        let h = 0.5 * self.p;
        let bc = self.beta * self.cross;
        let (d1, e1) = self.comps[0].dq_d2q(t.t1, self.p, self.kappa);
        let (d2, e2) = self.comps[1].dq_d2q(t.t2, self.p, self.kappa);
        let g1 = d1 - bc * t.t1.powf(h - 1.0) * t.t2.powf(h);
        let g2 = d2 - bc * t.t2.powf(h - 1.0) * t.t1.powf(h);
        let h11 = e1 - bc * (h - 1.0) * t.t1.powf(h - 2.0) * t.t2.powf(h);
        let h22 = e2 - bc * (h - 1.0) * t.t2.powf(h - 2.0) * t.t1.powf(h);
        let h12 = -bc * h * t.t1.powf(h - 1.0) * t.t2.powf(h - 1.0);
        ((g1, g2), [h11, h12, h22])
    }

    /// Nehari residuals of `(t₁u₁, t₂u₂)`, i.e. `t_i ∂_i h(t)`.
    pub fn residual(&self, t: FiberPoint) -> NehariResidual {
        let (g1, g2) = self.gradient(t);
        NehariResidual { r1: t.t1 * g1, r2: t.t2 * g2 }
    }

    /// Necessary condition for an interior maximizer: some positive `t`
    /// makes `κ t_i^p P_i + β (t₁t₂)^{p/2} C` positive for both `i`.
    pub fn admits_interior_max(&self) -> bool {
        let (p1, p2) = (self.kappa * self.comps[0].power, self.kappa * self.comps[1].power);
        if p1 <= 0.0 || p2 <= 0.0 {
            return false;
        }
        if self.beta >= 0.0 {
            return true;
        }
        let bc = self.beta * self.cross;
        p1 * p2 > bc * bc
    }

    fn converged(&self, t: FiberPoint, g: (f64, f64), h: f64, tol: f64) -> bool {
        (t.t1 * g.0).abs().max((t.t2 * g.1).abs()) <= tol * (1.0 + h.abs())
    }

    /// Damped Newton ascent from `t0`. Returns the critical point when it is a
    /// strict local maximum.
    fn newton_max(&self, t0: FiberPoint, tol: f64, max_iter: usize) -> Option<(FiberPoint, f64)> {
        let mut t = t0;
        let mut hv = self.value(t);
        for _ in 0..max_iter {
            let (g, [h11, h12, h22]) = self.gradient_hessian(t);
            let det = h11 * h22 - h12 * h12;
            if self.converged(t, g, hv, tol) {
                return (h11 < 0.0 && det > 0.0).then_some((t, hv));
            }
            let dir = if h11 < 0.0 && det > 0.0 {
                ((-h22 * g.0 + h12 * g.1) / det, (h12 * g.0 - h11 * g.1) / det)
            } else {
                let s = 1.0 / h11.abs().max(h22.abs()).max(1e-12);
                (s * g.0, s * g.1)
            };
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let tn = FiberPoint::new(t.t1 + alpha * dir.0, t.t2 + alpha * dir.1);
                if tn.is_valid() {
                    let hn = self.value(tn);
                    if hn >= hv - 1e-13 * (1.0 + hv.abs()) {
                        t = tn;
                        hv = hn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                let g = self.gradient(t);
                return (self.converged(t, g, hv, tol * 10.0)).then_some((t, hv));
            }
        }
        let g = self.gradient(t);
        self.converged(t, g, hv, tol).then_some((t, hv))
    }

    /// Damped Newton on `∇h = 0`, merit `Σ (t_i ∂_i h)²`. Accepts any
    /// nondegenerate critical point, maximum or saddle.
    fn newton_root(&self, t0: FiberPoint, tol: f64, max_iter: usize) -> Option<(FiberPoint, f64)> {
        let merit = |t: FiberPoint| {
            let r = self.residual(t);
            r.r1 * r.r1 + r.r2 * r.r2
        };
        let mut t = t0;
        let mut m = merit(t);
        for _ in 0..max_iter {
            let (g, [h11, h12, h22]) = self.gradient_hessian(t);
            let hv = self.value(t);
            if self.converged(t, g, hv, tol) {
                return Some((t, hv));
            }
            let det = h11 * h22 - h12 * h12;
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let dir = ((-h22 * g.0 + h12 * g.1) / det, (h12 * g.0 - h11 * g.1) / det);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let tn = FiberPoint::new(t.t1 + alpha * dir.0, t.t2 + alpha * dir.1);
                if tn.is_valid() {
                    let mn = merit(tn);
                    if mn < m {
                        t = tn;
                        m = mn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                return None;
            }
        }
        None
    }

    /// Log-spaced scan; returns the best sample and whether it lies on the box edge.
    fn scan_max(&self, t_min: f64, t_max: f64, n: usize) -> (FiberPoint, bool) {
        let ts = log_space(t_min, t_max, n);
        let q1: Vec<f64> = ts.iter().map(|&t| self.comps[0].q(t, self.p, self.kappa)).collect();
        let q2: Vec<f64> = ts.iter().map(|&t| self.comps[1].q(t, self.p, self.kappa)).collect();
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for (a, &t1) in ts.iter().enumerate() {
            for (b, &t2) in ts.iter().enumerate() {
                let v = q1[a] + q2[b] + self.coupling(FiberPoint::new(t1, t2));
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let edge = a == 0 || b == 0 || a + 1 == n || b + 1 == n;
        (FiberPoint::new(ts[a], ts[b]), edge)
    }

    /// Global maximizer over the positive quadrant: scan, then Newton.
    pub fn global_max(&self, opts: &ProjectionOptions) -> Option<(FiberPoint, f64)> {
        if !self.admits_interior_max() {
            return None;
        }
        let (mut lo, mut hi) = (opts.t_min, opts.t_max);
        let (mut start, mut edge) = self.scan_max(lo, hi, opts.scan_n);
        if edge {
            lo /= opts.enlarge;
            hi *= opts.enlarge;
            (start, edge) = self.scan_max(lo, hi, opts.scan_n);
            if edge {
                return None;
            }
        }
        self.newton_max(start, 0.1 * opts.tol, opts.max_newton)
    }

    /// Maximizer found by Newton from `start`, falling back to the full scan.
    pub fn max_from(&self, start: FiberPoint, opts: &ProjectionOptions) -> Option<(FiberPoint, f64)> {
        if !self.admits_interior_max() {
            return None;
        }
        if start.is_valid() {
            if let Some(found) = self.newton_max(start, 0.1 * opts.tol, opts.max_newton) {
                return Some(found);
            }
        }
        self.global_max(opts)
    }

    /// Any critical point of `h` reached by Newton from `start`.
    pub fn critical_from(&self, start: FiberPoint, opts: &ProjectionOptions) -> Option<(FiberPoint, f64)> {
        self.newton_root(start, 0.1 * opts.tol, opts.max_newton)
    }

    /// Cells of an `n × n` log grid over `[t_min, t_max]²` containing a zero
    /// of the bilinear interpolant of `∇h`. Returns one point per zero found.
    pub fn critical_cells(&self, t_min: f64, t_max: f64, n: usize) -> Vec<FiberPoint> {
        let ts = log_space(t_min, t_max, n);
        let h = 0.5 * self.p;
        let bc = self.beta * self.cross;
        let d1: Vec<f64> = ts.iter().map(|&t| self.comps[0].dq(t, self.p, self.kappa)).collect();
        let d2: Vec<f64> = ts.iter().map(|&t| self.comps[1].dq(t, self.p, self.kappa)).collect();
        // sign-preserving rescaling t_i ∂_i h keeps the grid values well scaled
        let grad = |a: usize, b: usize| -> (f64, f64) {
            let (t1, t2) = (ts[a], ts[b]);
            let g1 = d1[a] - bc * t1.powf(h - 1.0) * t2.powf(h);
            let g2 = d2[b] - bc * t2.powf(h - 1.0) * t1.powf(h);
            (t1 * g1, t2 * g2)
        };
        let mut g = vec![(0.0, 0.0); n * n];
        for a in 0..n {
            for b in 0..n {
                g[a * n + b] = grad(a, b);
            }
        }
        let mut out = Vec::new();
        for a in 0..n - 1 {
            for b in 0..n - 1 {
                let c = [g[a * n + b], g[(a + 1) * n + b], g[a * n + b + 1], g[(a + 1) * n + b + 1]];
                for (xi, eta) in bilinear_zeros(&c) {
                    let t1 = ts[a] * (ts[a + 1] / ts[a]).powf(xi);
                    let t2 = ts[b] * (ts[b + 1] / ts[b]).powf(eta);
                    out.push(FiberPoint::new(t1, t2));
                }
            }
        }
        out
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Common zeros in `[0,1)²` of two bilinear functions given by corner values
/// `[f(0,0), f(1,0), f(0,1), f(1,1)]` (paired as `(f, g)`).
fn bilinear_zeros(c: &[(f64, f64); 4]) -> Vec<(f64, f64)> {
    let changes = |sel: fn(&(f64, f64)) -> f64| {
        let v: Vec<f64> = c.iter().map(sel).collect();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };
    if !changes(|x| x.0) || !changes(|x| x.1) {
        return Vec::new();
    }
    // f = a0 + a1 ξ + a2 η + a3 ξη
    let coef = |sel: fn(&(f64, f64)) -> f64| {
        let (f00, f10, f01, f11) = (sel(&c[0]), sel(&c[1]), sel(&c[2]), sel(&c[3]));
        (f00, f10 - f00, f01 - f00, f11 - f10 - f01 + f00)
    };
    let (a0, a1, a2, a3) = coef(|x| x.0);
    let (b0, b1, b2, b3) = coef(|x| x.1);
    // eliminate ξ: (a0 + a2η)(b1 + b3η) − (b0 + b2η)(a1 + a3η) = 0
    let qa = a2 * b3 - b2 * a3;
    let qb = a0 * b3 + a2 * b1 - b0 * a3 - b2 * a1;
    let qc = a0 * b1 - b0 * a1;
    let mut etas = Vec::new();
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if qa.abs() <= 1e-14 * scale {
        if qb != 0.0 {
            etas.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -0.5 * (qb + qb.signum() * sq);
            etas.push(q / qa);
            if q != 0.0 {
                etas.push(qc / q);
            }
        }
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    for eta in etas {
        if !(0.0..1.0).contains(&eta) {
            continue;
        }
        let da = a1 + a3 * eta;
        let db = b1 + b3 * eta;
        let xi = if da.abs() >= db.abs() {
            if da == 0.0 {
                continue;
            }
            -(a0 + a2 * eta) / da
        } else {
            -(b0 + b2 * eta) / db
        };
        if (0.0..1.0).contains(&xi) && !out.iter().any(|&(x, e)| (x - xi).abs() < 1e-12 && (e - eta).abs() < 1e-12) {
            out.push((xi, eta));
        }
    }
    out
}

/// `h_u(t)`, evaluated through the full energy of the rescaled state.
pub fn fiber_value(problem: &Problem, u: &StatePair, t: FiberPoint) -> Result<f64> {
    problem.total_energy(&u.scaled(t.t1, t.t2))
}

/// `∇h_u(t)`.
pub fn fiber_gradient(problem: &Problem, u: &StatePair, t: FiberPoint) -> Result<(f64, f64)> {
    Ok(FiberMap::new(problem, u)?.gradient(t))
}

fn check_nontrivial(u: &StatePair) -> Result<()> {
    if u.u1.is_zero() || u.u2.is_zero() {
        return Err(Error::DegenerateInput("both components must be nontrivial".into()));
    }
    Ok(())
}

fn finish(problem: &Problem, u: &StatePair, found: Option<(FiberPoint, f64)>, opts: &ProjectionOptions) -> Result<ProjectionResult> {
    match found {
        Some((t, _)) => {
            let projected = u.scaled(t.t1, t.t2);
            let residual = problem.nehari_residual(&projected)?;
            let energy = problem.total_energy(&projected)?;
            let status = if residual.max_abs() <= opts.tol * (1.0 + energy.abs()) {
                ProjectionStatus::InteriorMax
            } else {
                ProjectionStatus::NotProjectable
            };
            Ok(ProjectionResult { t, projected, residual, energy, status })
        }
        None => Ok(ProjectionResult {
            t: FiberPoint::ones(),
            projected: u.clone(),
            residual: problem.nehari_residual(u)?,
            energy: problem.total_energy(u)?,
            status: ProjectionStatus::NotProjectable,
        }),
    }
}

/// Projects `u` onto the Nehari set along its fiber: `u ↦ t_u u` with `t_u`
/// the global maximizer of `h_u` over the positive quadrant.
pub fn project_to_nehari(problem: &Problem, u: &StatePair, opts: &ProjectionOptions) -> Result<ProjectionResult> {
    check_nontrivial(u)?;
    let fm = FiberMap::new(problem, u)?;
    finish(problem, u, fm.global_max(opts), opts)
}

/// As [`project_to_nehari`], starting Newton at `start` before falling back to the scan.
pub fn project_to_nehari_from(
    problem: &Problem,
    u: &StatePair,
    start: FiberPoint,
    opts: &ProjectionOptions,
) -> Result<ProjectionResult> {
    check_nontrivial(u)?;
    let fm = FiberMap::new(problem, u)?;
    finish(problem, u, fm.max_from(start, opts), opts)
}

/// Rescales `u` to the critical point of `h_u` reached from `start`, whether
/// or not it is a maximum. Used in the cooperative regime, where the fiber
/// critical point of a synchronized state is a saddle of `h_u`.
pub fn nehari_rescale(problem: &Problem, u: &StatePair, start: FiberPoint, opts: &ProjectionOptions) -> Result<ProjectionResult> {
    check_nontrivial(u)?;
    let fm = FiberMap::new(problem, u)?;
    finish(problem, u, fm.critical_from(start, opts), opts)
}

/// Scales each component to unit Dirichlet norm `∫|∇u_i|² = 1`.
pub fn sphere_normalize(grid: &Grid, u: &StatePair) -> Result<StatePair> {
    grid.check_pair(u)?;
    let n1 = grid.dirichlet_norm_sq(&u.u1).sqrt();
    let n2 = grid.dirichlet_norm_sq(&u.u2).sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::DegenerateInput("cannot normalize a zero component".into()));
    }
    Ok(u.scaled(1.0 / n1, 1.0 / n2))
}

/// One-dimensional fiber `τ ↦ I_i(τ z)` of a single component, used by the
/// scalar solver. `kappa` weights the `∫|z|^p` term.
#[derive(Debug, Clone)]
pub struct ScalarFiber {
    comp: ComponentFiber,
    p: f64,
    kappa: f64,
}

impl ScalarFiber {
    pub fn new(problem: &Problem, z: &ScalarField, i: usize, kappa: f64) -> Result<Self> {
        problem.grid.check(z)?;
        Ok(Self { comp: ComponentFiber::new(problem, z, i), p: problem.params.p, kappa })
    }

    pub fn value(&self, t: f64) -> f64 {
        self.comp.q(t, self.p, self.kappa)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.comp.dq(t, self.p, self.kappa)
    }

    /// Maximizer of the fiber on `t > 0`, from `start` if given, else by scan.
    pub fn maximize(&self, start: Option<f64>, opts: &ProjectionOptions) -> Option<(f64, f64)> {
        if self.comp.power <= 0.0 {
            return None;
        }
        let t0 = match start {
            Some(t) if t > 0.0 && t.is_finite() => t,
            _ => {
                let mut found = None;
                for grow in [1.0, opts.enlarge] {
                    let ts = log_space(opts.t_min / grow, opts.t_max * grow, opts.scan_n * 4);
                    let (k, _) = ts
                        .iter()
                        .map(|&t| self.value(t))
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |b, (k, v)| if v > b.1 { (k, v) } else { b });
                    if k > 0 && k + 1 < ts.len() {
                        found = Some(ts[k]);
                        break;
                    }
                }
                found?
            }
        };
        let mut t = t0;
        let mut v = self.value(t);
        let tol = 0.1 * opts.tol;
        for _ in 0..opts.max_newton {
            let (d, d2) = self.comp.dq_d2q(t, self.p, self.kappa);
            if (t * d).abs() <= tol * (1.0 + v.abs()) {
                return (d2 < 0.0).then_some((t, v));
            }
            let step = if d2 < 0.0 { -d / d2 } else { d.signum() * 0.5 * t };
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let tn = t + alpha * step;
                if tn > 0.0 {
                    let vn = self.value(tn);
                    if vn >= v - 1e-13 * (1.0 + v.abs()) {
                        t = tn;
                        v = vn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let d = self.derivative(t);
        ((t * d).abs() <= 10.0 * tol * (1.0 + v.abs())).then_some((t, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientFamily;
    use crate::energy::ProblemParams;
    use crate::grid::GridSpec;

    fn bumps(problem: &Problem, c1: (f64, f64), c2: (f64, f64), width: f64) -> StatePair {
        let g = &problem.grid;
        let bump = |c: (f64, f64)| {
            g.sample(|x, y| {
                let r2 = (x - c.0).powi(2) + (y - c.1).powi(2);
                (-r2 / (width * width)).exp() * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin()
            })
        };
        StatePair::new(bump(c1), bump(c2))
    }

    fn problem(beta: f64, fam: CoefficientFamily) -> Problem {
        Problem::new(GridSpec::unit_square(15), ProblemParams::new(0.0, 0.0, beta, 4.0, 1.0), fam.clone(), fam).unwrap()
    }

    #[test]
    fn bilinear_zero_of_linear_functions() {
        // f = ξ − 0.3, g = η − 0.6
        let c = [(-0.3, -0.6), (0.7, -0.6), (-0.3, 0.4), (0.7, 0.4)];
        let z = bilinear_zeros(&c);
        assert_eq!(z.len(), 1);
        assert!((z[0].0 - 0.3).abs() < 1e-12 && (z[0].1 - 0.6).abs() < 1e-12);
        let none = [(1.0, -0.6), (0.7, -0.6), (0.3, 0.4), (0.7, 0.4)];
        assert!(bilinear_zeros(&none).is_empty());
    }

    #[test]
    fn fiber_value_at_unit_point_is_energy() {
        let pr = problem(-2.0, CoefficientFamily::example(1.0));
        let u = bumps(&pr, (0.3, 0.5), (0.7, 0.5), 0.2).scaled(3.0, 5.0);
        let e = pr.total_energy(&u).unwrap();
        assert_eq!(fiber_value(&pr, &u, FiberPoint::ones()).unwrap(), e);
        let fm = FiberMap::new(&pr, &u).unwrap();
        for t in [FiberPoint::ones(), FiberPoint::new(0.3, 2.2), FiberPoint::new(4.0, 0.9)] {
            let direct = fiber_value(&pr, &u, t).unwrap();
            assert!((fm.value(t) - direct).abs() < 1e-11 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        for (beta, fam) in [(-2.0, CoefficientFamily::example(1.0)), (3.0, CoefficientFamily::example(1.5))] {
            let pr = problem(beta, fam);
            let u = bumps(&pr, (0.3, 0.5), (0.6, 0.4), 0.25).scaled(4.0, 6.0);
            let fm = FiberMap::new(&pr, &u).unwrap();
            let t = FiberPoint::new(0.8, 1.3);
            let ((g1, g2), [h11, h12, h22]) = fm.gradient_hessian(t);
            let d = 1e-5;
            let f = |a: f64, b: f64| fiber_value(&pr, &u, FiberPoint::new(a, b)).unwrap();
            let fd1 = (f(t.t1 + d, t.t2) - f(t.t1 - d, t.t2)) / (2.0 * d);
            let fd2 = (f(t.t1, t.t2 + d) - f(t.t1, t.t2 - d)) / (2.0 * d);
            assert!((g1 - fd1).abs() < 1e-7 * (1.0 + fd1.abs()));
            assert!((g2 - fd2).abs() < 1e-7 * (1.0 + fd2.abs()));
            let gp = fm.gradient(FiberPoint::new(t.t1 + d, t.t2));
            let gm = fm.gradient(FiberPoint::new(t.t1 - d, t.t2));
            assert!((h11 - (gp.0 - gm.0) / (2.0 * d)).abs() < 1e-5 * (1.0 + h11.abs()));
            assert!((h12 - (gp.1 - gm.1) / (2.0 * d)).abs() < 1e-5 * (1.0 + h12.abs()));
            let gp = fm.gradient(FiberPoint::new(t.t1, t.t2 + d));
            let gm = fm.gradient(FiberPoint::new(t.t1, t.t2 - d));
            assert!((h22 - (gp.1 - gm.1) / (2.0 * d)).abs() < 1e-5 * (1.0 + h22.abs()));
        }
    }

    #[test]
    fn decoupled_projection_has_closed_form() {
        let pr = problem(-3.0, CoefficientFamily::identity(1.0));
        // disjoint supports: left and right halves
        let g = &pr.grid;
        let u1 = g.sample(|x, y| if x < 0.45 { (x * (0.45 - x) * y * (1.0 - y)).max(0.0) } else { 0.0 });
        let u2 = g.sample(|x, y| if x > 0.55 { ((x - 0.55) * (1.0 - x) * y * (1.0 - y)).max(0.0) * 2.0 } else { 0.0 });
        let u = StatePair::new(u1, u2);
        let m = pr.moments(&u).unwrap();
        assert_eq!(m.cross, 0.0);
        let r = project_to_nehari(&pr, &u, &ProjectionOptions::default()).unwrap();
        assert_eq!(r.status, ProjectionStatus::InteriorMax);
        for i in 0..2 {
            let exact = (m.dirichlet[i] / m.power[i]).powf(1.0 / (4.0 - 2.0));
            let got = r.t.get(i);
            assert!((got - exact).abs() <= 1e-10 * exact, "{got} {exact}");
        }
    }

    #[test]
    fn diagonal_states_are_not_projectable() {
        let pr = problem(-2.0, CoefficientFamily::example(1.0));
        let v = bumps(&pr, (0.5, 0.5), (0.5, 0.5), 0.3);
        let r = project_to_nehari(&pr, &v, &ProjectionOptions::default()).unwrap();
        assert_eq!(r.status, ProjectionStatus::NotProjectable);
    }

    #[test]
    fn projection_is_idempotent() {
        let pr = problem(-2.0, CoefficientFamily::example(1.0));
        let u = bumps(&pr, (0.3, 0.5), (0.7, 0.5), 0.15);
        let opts = ProjectionOptions::default();
        let r = project_to_nehari(&pr, &u, &opts).unwrap();
        assert_eq!(r.status, ProjectionStatus::InteriorMax);
        assert!(r.residual.max_abs() <= opts.tol * (1.0 + r.energy.abs()));
        let again = project_to_nehari(&pr, &r.projected, &opts).unwrap();
        assert!(again.t.distance(&FiberPoint::ones()) < 1e-8);
    }

    #[test]
    fn degenerate_input_rejected() {
        let pr = problem(-2.0, CoefficientFamily::example(1.0));
        let u = StatePair::new(pr.grid.sample(|x, _| x), pr.grid.zeros());
        assert!(matches!(
            project_to_nehari(&pr, &u, &ProjectionOptions::default()),
            Err(Error::DegenerateInput(_))
        ));
        assert!(sphere_normalize(&pr.grid, &u).is_err());
    }

    #[test]
    fn sphere_normalization() {
        let pr = problem(-2.0, CoefficientFamily::example(1.0));
        let u = bumps(&pr, (0.3, 0.5), (0.7, 0.5), 0.2);
        let n = sphere_normalize(&pr.grid, &u).unwrap();
        for i in 0..2 {
            assert!((pr.grid.dirichlet_norm_sq(n.component(i)) - 1.0).abs() < 1e-12);
        }
        let again = sphere_normalize(&pr.grid, &n).unwrap();
        assert!(again.axpy(-1.0, &n).max_abs() < 1e-15 * n.max_abs().max(1.0) * 10.0);
        let scaled = sphere_normalize(&pr.grid, &u.scaled(7.0, 0.01)).unwrap();
        assert!(scaled.axpy(-1.0, &n).max_abs() < 1e-13 * n.max_abs());
    }

    #[test]
    fn scalar_fiber_closed_form() {
        let pr = Problem::new(
            GridSpec::unit_square(15),
            ProblemParams::new(2.0, 0.0, 0.0, 3.0, 0.5),
            CoefficientFamily::identity(0.5),
            CoefficientFamily::identity(0.5),
        )
        .unwrap();
        let z = pr.grid.sample(|x, y| x * (1.0 - x) * y * (1.0 - y));
        let sf = ScalarFiber::new(&pr, &z, 0, 1.0).unwrap();
        let (t, _) = sf.maximize(None, &ProjectionOptions::default()).unwrap();
        let m = pr.moments(&StatePair::new(z.clone(), pr.grid.zeros())).unwrap();
        let exact = ((m.dirichlet[0] - 2.0 * m.mass[0]) / m.power[0]).powf(1.0 / (3.0 - 2.0));
        assert!((t - exact).abs() < 1e-10 * exact);
    }
}
