//! Principal Dirichlet eigenpair of the 5-point Laplacian and the admissible
//! range of `(λ₁, λ₂)`.

use crate::energy::ProblemParams;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::linalg::{conjugate_gradient, dot, norm};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub mu: f64,
    /// Positive eigenvector with `(hx hy Σ φ²)^{1/2} = 1`.
    pub phi: ScalarField,
    pub iterations: usize,
    /// `(hx hy Σ ((-Δ_h)φ - μφ)²)^{1/2}`
    pub residual: f64,
}

/// Inverse power iteration with a conjugate-gradient inner solve.
///
/// Converged when both the eigenvalue increment and the eigen-residual fall
/// below `tol · μ`.
pub fn principal_eigenpair(grid: &Grid, tol: f64, max_iter: usize) -> Result<EigenPair> {
    let n = grid.node_count();
    let w = grid.cell_area();
    let apply = |v: &[f64], out: &mut [f64]| grid.apply_neg_laplacian(v, out);
    let mut x = vec![1.0; n];
    let s = 1.0 / norm(&x);
    x.iter_mut().for_each(|v| *v *= s);
    let mut ax = vec![0.0; n];
    let mut mu_prev = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut y = x.clone();
        conjugate_gradient(apply, &x, &mut y, 1e-13, 10 * n);
        let s = 1.0 / norm(&y);
        y.iter_mut().for_each(|v| *v *= s);
        apply(&y, &mut ax);
        let mu = dot(&y, &ax);
        let r: Vec<f64> = ax.iter().zip(&y).map(|(a, v)| a - mu * v).collect();
        // unit Euclidean y ↦ unit-L² φ = y/√w, and the L² norm carries √w back
        residual = norm(&r);
        x = y;
        if (mu - mu_prev).abs() <= tol * mu && residual <= tol * mu {
            let scale = 1.0 / (w.sqrt() * norm(&x));
            let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            let phi = ScalarField::from_vec(x.iter().map(|v| sign * scale * v).collect());
            return Ok(EigenPair { mu, phi, iterations: it, residual });
        }
        mu_prev = mu;
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// `(8/h²)`-type closed form of the smallest 5-point eigenvalue on the grid.
pub fn stencil_mu1_exact(grid: &Grid) -> f64 {
    let sx = (std::f64::consts::PI * grid.hx() / (2.0 * grid.spec().lx)).sin();
    let sy = (std::f64::consts::PI * grid.hy() / (2.0 * grid.spec().ly)).sin();
    4.0 / (grid.hx() * grid.hx()) * sx * sx + 4.0 / (grid.hy() * grid.hy()) * sy * sy
}

/// Rayleigh quotient of `f` under the cell quadrature used by the energy.
pub fn quadrature_rayleigh(grid: &Grid, f: &ScalarField) -> Result<f64> {
    Ok(grid.dirichlet_norm_sq(f) / grid.l2_inner(f, f)?)
}

/// The smaller of the stencil eigenvalue and the quadrature Rayleigh quotient
/// of its eigenvector.
pub fn conservative_mu1(grid: &Grid, pair: &EigenPair) -> Result<f64> {
    Ok(pair.mu.min(quadrature_rayleigh(grid, &pair.phi)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    /// Both `λ_i < ((p-2-γ)/(p-2)) ν μ₁`.
    Admissible,
    /// Both `λ_i < ν μ₁` but not admissible.
    AdmissibleWeak,
    Inadmissible,
}

/// The threshold `((p-2-γ)/(p-2)) ν μ₁`.
pub fn lambda_threshold(p: f64, nu: f64, gamma: f64, mu1: f64) -> f64 {
    (p - 2.0 - gamma) / (p - 2.0) * nu * mu1
}

pub fn admissible(params: &ProblemParams, nu: f64, gamma: f64, mu1: f64) -> Admissibility {
    let strong = lambda_threshold(params.p, nu, gamma, mu1);
    let weak = nu * mu1;
    let (l1, l2) = (params.lambda1, params.lambda2);
    if l1 < strong && l2 < strong {
        Admissibility::Admissible
    } else if l1 < weak && l2 < weak {
        Admissibility::AdmissibleWeak
    } else {
        Admissibility::Inadmissible
    }
}
