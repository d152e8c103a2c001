//! The discrete energy of the coupled system, its exact nodal gradient and
//! the two Nehari residuals.
//!
//! Every integral uses the cell quadrature of [`Grid`]; the coefficient
//! `𝒜_i` is evaluated at the cell-center value of `u_i`, so the energy is an
//! exactly differentiable function of the nodal values and the gradient below
//! is its true derivative.

use crate::coeffs::CoefficientFamily;
use crate::error::{Error, Result};
use crate::grid::{CellSample, Grid, GridSpec, ScalarField, StatePair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
    pub p: f64,
    pub gamma: f64,
}

impl ProblemParams {
    pub fn new(lambda1: f64, lambda2: f64, beta: f64, p: f64, gamma: f64) -> Self {
        Self { lambda1, lambda2, beta, p, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |r: String| Err(Error::InvalidParams(r));
        if !(self.p.is_finite() && self.p > 2.0) {
            return bad(format!("p must exceed 2, got {}", self.p));
        }
        if !(self.gamma > 0.0 && self.gamma < self.p - 2.0) {
            return bad(format!("gamma must lie in (0, p-2) = (0, {}), got {}", self.p - 2.0, self.gamma));
        }
        if !(self.lambda1.is_finite() && self.lambda2.is_finite() && self.beta.is_finite()) {
            return bad("lambda and beta must be finite".into());
        }
        Ok(())
    }

    pub fn lambda(&self, i: usize) -> f64 {
        if i == 0 {
            self.lambda1
        } else {
            self.lambda2
        }
    }

    /// Same parameters with the roles of the two components exchanged.
    pub fn swapped(&self) -> Self {
        Self { lambda1: self.lambda2, lambda2: self.lambda1, ..*self }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }
}

/// The two constraint values defining the Nehari set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NehariResidual {
    pub r1: f64,
    pub r2: f64,
}

impl NehariResidual {
    pub fn max_abs(&self) -> f64 {
        self.r1.abs().max(self.r2.abs())
    }
    pub fn get(&self, i: usize) -> f64 {
        if i == 0 {
            self.r1
        } else {
            self.r2
        }
    }
}

/// Integrated quantities of a state, one entry per component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    /// `∫ 𝒜_i(u_i) |∇u_i|²`
    pub stiff: [f64; 2],
    /// `∫ 𝒜′_i(u_i) |∇u_i|² u_i`
    pub dterm: [f64; 2],
    /// `∫ |∇u_i|²`
    pub dirichlet: [f64; 2],
    /// `∫ u_i²`
    pub mass: [f64; 2],
    /// `∫ |u_i|^p`
    pub power: [f64; 2],
    /// `∫ |u_1|^{p/2} |u_2|^{p/2}`
    pub cross: f64,
}

#[inline]
pub(crate) fn abs_pow(x: f64, q: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else if q == 1.0 {
        a
    } else if q == 2.0 {
        a * a
    } else if q == 3.0 {
        a * a * a
    } else if q == 4.0 {
        let b = a * a;
        b * b
    } else {
        a.powf(q)
    }
}

/// `|x|^{q-1} x`, zero at zero.
#[inline]
pub(crate) fn signed_pow(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * abs_pow(x, q)
    }
}

/// The coupling potential `G_β(t₁, t₂)`.
pub fn coupling_g(t1: f64, t2: f64, params: &ProblemParams) -> f64 {
    let p = params.p;
    let h = 0.5 * p;
    (abs_pow(t1, p) + 2.0 * params.beta * abs_pow(t1, h) * abs_pow(t2, h) + abs_pow(t2, p)) / p
}

/// `g_β = ∇G_β`.
pub fn coupling_grad_g(t1: f64, t2: f64, params: &ProblemParams) -> (f64, f64) {
    let p = params.p;
    let h = 0.5 * p;
    (
        signed_pow(t1, p - 1.0) + params.beta * signed_pow(t1, h - 1.0) * abs_pow(t2, h),
        signed_pow(t2, p - 1.0) + params.beta * signed_pow(t2, h - 1.0) * abs_pow(t1, h),
    )
}

/// Grid, parameters and the two coefficient families of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: Grid,
    pub params: ProblemParams,
    pub families: [CoefficientFamily; 2],
}

impl Problem {
    pub fn new(
        spec: GridSpec,
        params: ProblemParams,
        fam1: CoefficientFamily,
        fam2: CoefficientFamily,
    ) -> Result<Self> {
        let grid = Grid::new(spec)?;
        params.validate()?;
        fam1.validate()?;
        fam2.validate()?;
        Ok(Self { grid, params, families: [fam1, fam2] })
    }

    pub fn family(&self, i: usize) -> &CoefficientFamily {
        &self.families[i]
    }

    /// The instance with components exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            params: self.params.swapped(),
            families: [self.families[1].clone(), self.families[0].clone()],
        }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { params: self.params.with_beta(beta), ..self.clone() }
    }

    /// Smallest ellipticity constant over both families.
    pub fn nu(&self) -> f64 {
        self.families[0].nu.min(self.families[1].nu)
    }

    pub fn moments(&self, u: &StatePair) -> Result<Moments> {
        self.grid.check_pair(u)?;
        let c1 = self.grid.cell_samples(&u.u1);
        let c2 = self.grid.cell_samples(&u.u2);
        Ok(self.moments_from_cells(&c1, &c2))
    }

    pub(crate) fn moments_from_cells(&self, c1: &[CellSample], c2: &[CellSample]) -> Moments {
        let p = self.params.p;
        let h = 0.5 * p;
        let mut m = Moments::default();
        for (i, cells) in [c1, c2].into_iter().enumerate() {
            let fam = &self.families[i];
            let constant = fam.is_constant();
            let (mut st, mut dt, mut di, mut ma, mut po) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for s in cells {
                let g2 = s.grad_sq();
                let v = s.value;
                if constant {
                    st += g2;
                } else {
                    st += fam.eval_a(v) * g2;
                    dt += fam.eval_da(v) * g2 * v;
                }
                di += g2;
                ma += v * v;
                po += abs_pow(v, p);
            }
            let w = self.grid.cell_area();
            m.stiff[i] = st * w;
            m.dterm[i] = dt * w;
            m.dirichlet[i] = di * w;
            m.mass[i] = ma * w;
            m.power[i] = po * w;
        }
        let cross: f64 = c1
            .iter()
            .zip(c2)
            .map(|(a, b)| abs_pow(a.value, h) * abs_pow(b.value, h))
            .sum();
        m.cross = cross * self.grid.cell_area();
        m
    }

    /// Energy from precomputed moments, with the self-interaction scaled by `kappa`.
    pub(crate) fn energy_from(&self, m: &Moments, kappa: f64) -> f64 {
        let p = self.params.p;
        let mut e = 0.0;
        for i in 0..2 {
            e += 0.5 * m.stiff[i] - 0.5 * self.params.lambda(i) * m.mass[i] - kappa * m.power[i] / p;
        }
        e - 2.0 * self.params.beta / p * m.cross
    }

    pub(crate) fn residual_from(&self, m: &Moments, kappa: f64) -> NehariResidual {
        let r = |i: usize| {
            m.stiff[i] + 0.5 * m.dterm[i]
                - self.params.lambda(i) * m.mass[i]
                - kappa * m.power[i]
                - self.params.beta * m.cross
        };
        NehariResidual { r1: r(0), r2: r(1) }
    }

    pub fn total_energy(&self, u: &StatePair) -> Result<f64> {
        Ok(self.energy_from(&self.moments(u)?, 1.0))
    }

    /// Scalar energy `I_i(z)` of component `i ∈ {0, 1}`.
    pub fn scalar_energy(&self, z: &ScalarField, i: usize) -> Result<f64> {
        self.grid.check(z)?;
        let zero = self.grid.zeros();
        let u = if i == 0 {
            StatePair::new(z.clone(), zero)
        } else {
            StatePair::new(zero, z.clone())
        };
        let m = self.moments(&u)?;
        let p = self.params.p;
        Ok(0.5 * m.stiff[i] - 0.5 * self.params.lambda(i) * m.mass[i] - m.power[i] / p)
    }

    pub fn nehari_residual(&self, u: &StatePair) -> Result<NehariResidual> {
        Ok(self.residual_from(&self.moments(u)?, 1.0))
    }

    /// `∂E/∂u_{i,k}` for every node (not divided by the node volume).
    pub(crate) fn nodal_gradient(&self, u: &StatePair, kappa: f64) -> [Vec<f64>; 2] {
        let c1 = self.grid.cell_samples(&u.u1);
        let c2 = self.grid.cell_samples(&u.u2);
        let p = self.params.p;
        let h = 0.5 * p;
        let beta = self.params.beta;
        let w = self.grid.cell_area();
        let mut out = [vec![0.0; self.grid.node_count()], vec![0.0; self.grid.node_count()]];
        for i in 0..2 {
            let (mine, other) = if i == 0 { (&c1, &c2) } else { (&c2, &c1) };
            let fam = &self.families[i];
            let constant = fam.is_constant();
            let lambda = self.params.lambda(i);
            let sens: Vec<CellSample> = mine
                .iter()
                .zip(other.iter())
                .map(|(s, o)| {
                    let v = s.value;
                    let (a, da) = if constant { (1.0, 0.0) } else { (fam.eval_a(v), fam.eval_da(v)) };
                    let mut dv = 0.5 * da * s.grad_sq() - lambda * v - kappa * signed_pow(v, p - 1.0);
                    if beta != 0.0 {
                        dv -= beta * signed_pow(v, h - 1.0) * abs_pow(o.value, h);
                    }
                    CellSample { value: w * dv, gx: w * a * s.gx, gy: w * a * s.gy }
                })
                .collect();
            self.grid.scatter(&sens, &mut out[i]);
        }
        out
    }

    /// Exact gradient of [`Problem::total_energy`] divided by the node volume.
    pub fn euler_gradient(&self, u: &StatePair) -> Result<StatePair> {
        self.grid.check_pair(u)?;
        let inv = 1.0 / self.grid.cell_area();
        let [g1, g2] = self.nodal_gradient(u, 1.0);
        Ok(StatePair::new(
            ScalarField::from_vec(g1.into_iter().map(|v| v * inv).collect()),
            ScalarField::from_vec(g2.into_iter().map(|v| v * inv).collect()),
        ))
    }

    /// Discrete `L²` norm `(hx hy Σ G²)^{1/2}` of a volume-scaled gradient.
    pub fn residual_norm(&self, g: &StatePair) -> f64 {
        (self.grid.cell_area() * g.dot(g)).sqrt()
    }

    pub fn euler_residual_norm(&self, u: &StatePair) -> Result<f64> {
        Ok(self.residual_norm(&self.euler_gradient(u)?))
    }
}
