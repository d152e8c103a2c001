//! Reduced gradient descent on the product of unit spheres and the
//! Newton–Krylov polish.

use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::fiber::{FiberMap, FiberPoint, ProjectionOptions, ScalarFiber};
use crate::grid::{ScalarField, StatePair};
use crate::linalg::{dot, gmres, StiffnessSolver};

use super::SolverOptions;

/// What the descent projects onto along each fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Mode {
    /// One active component `i`, self-interaction weighted by `kappa`.
    Scalar { i: usize, kappa: f64 },
    /// Both components, global maximizer of the fiber map.
    Maximize,
    /// Both components, any critical point of the fiber map.
    Critical,
}

impl Mode {
    fn active(&self) -> [bool; 2] {
        match self {
            Mode::Scalar { i, .. } => [*i == 0, *i == 1],
            _ => [true, true],
        }
    }
    fn kappa(&self) -> f64 {
        match self {
            Mode::Scalar { kappa, .. } => *kappa,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DescentOutcome {
    pub u: StatePair,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
struct Point {
    v: StatePair,
    t: FiberPoint,
    u: StatePair,
    energy: f64,
}

pub(crate) struct Descent<'a> {
    pub problem: &'a Problem,
    pub kinv: &'a StiffnessSolver,
    pub opts: &'a SolverOptions,
    pub mode: Mode,
}

impl Descent<'_> {
    fn popts(&self) -> ProjectionOptions {
        self.opts.projection
    }

    fn normalize(&self, v: &StatePair) -> Option<StatePair> {
        let active = self.mode.active();
        let mut out = v.clone();
        for i in 0..2 {
            if active[i] {
                let n = self.problem.grid.dirichlet_norm_sq(v.component(i)).sqrt();
                if !(n > 0.0 && n.is_finite()) {
                    return None;
                }
                *out.component_mut(i) = v.component(i).scaled(1.0 / n);
            } else {
                *out.component_mut(i) = self.problem.grid.zeros();
            }
        }
        Some(out)
    }

    fn project(&self, v: &StatePair, warm: Option<FiberPoint>) -> Option<Point> {
        let popts = self.popts();
        let (t, energy) = match self.mode {
            Mode::Scalar { i, kappa } => {
                let sf = ScalarFiber::new(self.problem, v.component(i), i, kappa).ok()?;
                let (s, e) = sf
                    .maximize(warm.map(|w| w.get(i)), &popts)
                    .or_else(|| sf.maximize(None, &popts))?;
                (if i == 0 { FiberPoint::new(s, 1.0) } else { FiberPoint::new(1.0, s) }, e)
            }
            Mode::Maximize => {
                let fm = FiberMap::new(self.problem, v).ok()?;
                match warm {
                    Some(w) => fm.max_from(w, &popts)?,
                    None => fm.global_max(&popts)?,
                }
            }
            Mode::Critical => {
                let fm = FiberMap::new(self.problem, v).ok()?;
                let from_warm = warm.and_then(|w| fm.critical_from(w, &popts));
                match from_warm {
                    Some(found) => found,
                    None => self.critical_by_continuation(v, &fm)?,
                }
            }
        };
        Some(Point { v: v.clone(), t, u: v.scaled(t.t1, t.t2), energy })
    }

    /// Starts Newton from the decoupled maximizers shrunk by powers of two;
    /// attraction shifts the coupled critical point towards the origin.
    fn critical_by_continuation(&self, v: &StatePair, fm: &FiberMap) -> Option<(FiberPoint, f64)> {
        let popts = self.popts();
        let mut base = [1.0; 2];
        for (i, b) in base.iter_mut().enumerate() {
            let sf = ScalarFiber::new(self.problem, v.component(i), i, 1.0).ok()?;
            *b = sf.maximize(None, &popts)?.0;
        }
        (0..16).find_map(|k| {
            let s = 0.5f64.powi(k);
            fm.critical_from(FiberPoint::new(s * base[0], s * base[1]), &popts)
        })
    }

    /// `(K⁻¹ r_i − (v_i·r_i) v_i, r_i − (v_i·r_i) K v_i)` per active component,
    /// with `r_i = t_i ∂E/∂u_i`: the Riesz representative of the reduced
    /// gradient in the tangent space of the sphere, and its image under `K`.
    fn reduced_gradient(&self, pt: &Point, g: &[Vec<f64>; 2]) -> (StatePair, StatePair) {
        let active = self.mode.active();
        let mut d = StatePair::zeros(&self.problem.grid);
        let mut kd = StatePair::zeros(&self.problem.grid);
        for i in 0..2 {
            if !active[i] {
                continue;
            }
            let ti = pt.t.get(i);
            let r: Vec<f64> = g[i].iter().map(|x| ti * x).collect();
            let vi = pt.v.component(i);
            let c = dot(vi.as_slice(), &r);
            let kinv_r = self.kinv.solve(&r);
            let kv = self.problem.grid.apply_stiffness(vi);
            *d.component_mut(i) = ScalarField::from_vec(kinv_r.iter().zip(vi.as_slice()).map(|(a, b)| a - c * b).collect());
            *kd.component_mut(i) = ScalarField::from_vec(r.iter().zip(kv.as_slice()).map(|(a, b)| a - c * b).collect());
        }
        (d, kd)
    }

    fn k_dot(&self, a: &StatePair, b: &StatePair) -> f64 {
        let g = &self.problem.grid;
        g.apply_stiffness(&a.u1).dot(&b.u1) + g.apply_stiffness(&a.u2).dot(&b.u2)
    }

    pub fn run(&self, start: &StatePair, warm: Option<FiberPoint>) -> Result<DescentOutcome> {
        let v0 = self
            .normalize(start)
            .ok_or_else(|| Error::DegenerateInput("initial state has a zero component".into()))?;
        let mut cur = self
            .project(&v0, warm)
            .ok_or_else(|| Error::NotProjectable("initial state has no interior fiber critical point".into()))?;
        let kappa = self.mode.kappa();
        let active = self.mode.active();
        let w = self.problem.grid.cell_area();
        let mut history = vec![cur.energy];
        let mut prev: Option<(StatePair, StatePair)> = None;
        let mut alpha = f64::NAN;
        let mut it = 0;
        while it < self.opts.max_iter {
            let g = self.problem.nodal_gradient(&cur.u, kappa);
            if masked_residual(&g, active, w) <= self.opts.tol {
                break;
            }
            let (d, kd) = self.reduced_gradient(&cur, &g);
            let gnorm2 = d.dot(&kd);
            if !(gnorm2 > 0.0) {
                break;
            }
            alpha = match &prev {
                Some((pv, pkd)) => {
                    let s = cur.v.axpy(-1.0, pv);
                    let y = kd.axpy(-1.0, pkd);
                    let sy = s.dot(&y);
                    if sy > 0.0 {
                        self.k_dot(&s, &s) / sy
                    } else {
                        2.0 * alpha
                    }
                }
                None => 0.1 / gnorm2.sqrt(),
            }
            .clamp(1e-12, 1e12);
            let mut a = alpha;
            let mut next = None;
            for _ in 0..50 {
                if let Some(vn) = self.normalize(&cur.v.axpy(-a, &d)) {
                    if let Some(p) = self.project(&vn, Some(cur.t)) {
                        if p.energy <= cur.energy - 1e-4 * a * gnorm2 {
                            next = Some(p);
                            break;
                        }
                    }
                }
                a *= 0.5;
            }
            let Some(next) = next else { break };
            prev = Some((cur.v.clone(), kd));
            cur = next;
            it += 1;
            history.push(cur.energy);
            if history.len() > 20 {
                let old = history[history.len() - 21];
                if (old - cur.energy).abs() <= 1e-12 * (1.0 + cur.energy.abs()) {
                    break;
                }
            }
        }
        Ok(DescentOutcome { u: cur.u, iterations: it })
    }
}

fn masked_residual(g: &[Vec<f64>; 2], active: [bool; 2], w: f64) -> f64 {
    let s: f64 = (0..2).filter(|&i| active[i]).map(|i| dot(&g[i], &g[i])).sum();
    (s / w).sqrt()
}

#[derive(Debug, Clone)]
pub(crate) struct Polished {
    pub u: StatePair,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Newton–GMRES on the Euler equations of the (`kappa`-weighted) energy,
/// restricted to the active components. Hessian products come from central
/// differences of the gradient; `K⁻¹` preconditions each block.
pub(crate) fn polish(
    problem: &Problem,
    kinv: &StiffnessSolver,
    u0: &StatePair,
    kappa: f64,
    active: [bool; 2],
    opts: &SolverOptions,
) -> Polished {
    let n = problem.grid.node_count();
    let w = problem.grid.cell_area();
    let energy = |u: &StatePair| problem.energy_from(&problem.moments(u).expect("grid checked"), kappa);
    let grad = |u: &StatePair| {
        let mut g = problem.nodal_gradient(u, kappa);
        for i in 0..2 {
            if !active[i] {
                g[i].iter_mut().for_each(|x| *x = 0.0);
            }
        }
        g
    };
    let flat = |g: [Vec<f64>; 2]| -> Vec<f64> { g[0].iter().chain(&g[1]).copied().collect() };
    let unflat = |x: &[f64]| StatePair::new(ScalarField::from_vec(x[..n].to_vec()), ScalarField::from_vec(x[n..].to_vec()));
    let mut u = u0.clone();
    let mut e = energy(&u);
    let mut g = grad(&u);
    let mut res = masked_residual(&g, active, w);
    let mut it = 0;
    if u.max_abs() == 0.0 {
        return Polished { u, energy: e, residual: res, iterations: 0 };
    }
    let target = 1e-3 * opts.tol;
    while it < opts.max_refine && res > target {
        let b: Vec<f64> = flat(g.clone()).into_iter().map(|x| -x).collect();
        let scale = 1e-5 * (1.0 + u.max_abs());
        let hv = |x: &[f64]| -> Vec<f64> {
            let xm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if xm == 0.0 {
                return vec![0.0; 2 * n];
            }
            let eps = scale / xm;
            let dx = unflat(x);
            let gp = flat(grad(&u.axpy(eps, &dx)));
            let gm = flat(grad(&u.axpy(-eps, &dx)));
            gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * eps)).collect()
        };
        let pc = |r: &[f64]| -> Vec<f64> {
            let mut out = Vec::with_capacity(2 * n);
            for i in 0..2 {
                let block = &r[i * n..(i + 1) * n];
                if active[i] {
                    out.extend(kinv.solve(block));
                } else {
                    out.extend(std::iter::repeat_n(0.0, n));
                }
            }
            out
        };
        let mut delta = vec![0.0; 2 * n];
        gmres(hv, pc, &b, &mut delta, 1e-8, 40, 200);
        let step = unflat(&delta);
        let mut a = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let un = u.axpy(a, &step);
            let gn = grad(&un);
            let rn = masked_residual(&gn, active, w);
            let en = energy(&un);
            if rn < res && en <= e + 1e-11 * (1.0 + e.abs()) {
                u = un;
                g = gn;
                res = rn;
                e = en;
                accepted = true;
                break;
            }
            a *= 0.5;
        }
        it += 1;
        if !accepted {
            break;
        }
    }
    Polished { u, energy: e, residual: res, iterations: it }
}
