//! Small matrix-free solvers used by the eigen solver and the descent methods.

use std::f64::consts::PI;

use crate::grid::{Grid, ScalarField};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for a symmetric positive definite operator.
/// Stops when `‖b - Ax‖ ≤ rel_tol · ‖b‖`.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> CgOutcome
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = rel_tol * norm(b);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        if rr.sqrt() <= target {
            return CgOutcome { iterations: it, residual: rr.sqrt(), converged: true };
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    CgOutcome { iterations: max_iter, residual: rr.sqrt(), converged: rr.sqrt() <= target }
}

/// Direct solver for the quadrature stiffness matrix `K` of [`Grid::apply_stiffness`].
///
/// `K` is diagonalized by the discrete sine basis `sin(π(i+1)(k+1)/(n+1))`
/// in each direction, with eigenvalue
/// `hx·hy·[4/hx² · sx²cy² + 4/hy² · cx²sy²]` where `sx = sin(θx/2)`, `cx = cos(θx/2)`.
#[derive(Debug, Clone)]
pub struct StiffnessSolver {
    nx: usize,
    ny: usize,
    sx: Vec<f64>,
    sy: Vec<f64>,
    inv_eig: Vec<f64>,
}

fn sine_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            m[i * n + k] = (PI * ((i + 1) * (k + 1)) as f64 / (n + 1) as f64).sin();
        }
    }
    m
}

impl StiffnessSolver {
    pub fn new(grid: &Grid) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let (hx, hy) = (grid.hx(), grid.hy());
        let w = grid.cell_area();
        let norm = (nx + 1) as f64 * (ny + 1) as f64 / 4.0;
        let mut inv_eig = vec![0.0; nx * ny];
        for l in 0..ny {
            let ty = 0.5 * PI * (l + 1) as f64 / (ny + 1) as f64;
            let (sy, cy) = ty.sin_cos();
            for k in 0..nx {
                let tx = 0.5 * PI * (k + 1) as f64 / (nx + 1) as f64;
                let (sx, cx) = tx.sin_cos();
                let eig = w * (4.0 / (hx * hx) * sx * sx * cy * cy + 4.0 / (hy * hy) * cx * cx * sy * sy);
                inv_eig[l * nx + k] = 1.0 / (eig * norm);
            }
        }
        Self { nx, ny, sx: sine_matrix(nx), sy: sine_matrix(ny), inv_eig }
    }

    /// Unnormalized 2-D sine transform: `out[l][k] = Σ_ij S_x[i][k] S_y[j][l] v[j][i]`.
    fn transform(&self, v: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let mut tmp = vec![0.0; nx * ny];
        for j in 0..ny {
            let row = &v[j * nx..(j + 1) * nx];
            for k in 0..nx {
                let mut s = 0.0;
                for i in 0..nx {
                    s += self.sx[i * nx + k] * row[i];
                }
                tmp[j * nx + k] = s;
            }
        }
        let mut out = vec![0.0; nx * ny];
        for l in 0..ny {
            for j in 0..ny {
                let c = self.sy[j * ny + l];
                let src = &tmp[j * nx..(j + 1) * nx];
                let dst = &mut out[l * nx..(l + 1) * nx];
                for k in 0..nx {
                    dst[k] += c * src[k];
                }
            }
        }
        out
    }

    /// Returns `K⁻¹ r`.
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let mut c = self.transform(r);
        for (ck, ie) in c.iter_mut().zip(&self.inv_eig) {
            *ck *= ie;
        }
        // the sine matrices are symmetric, so the synthesis is the same transform
        self.transform(&c)
    }

    pub fn solve_field(&self, r: &ScalarField) -> ScalarField {
        ScalarField::from_vec(self.solve(r.as_slice()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub residual: f64,
}

/// Restarted GMRES on `M⁻¹ A x = M⁻¹ b`, left preconditioned.
/// Stops when the preconditioned residual drops below `rel_tol · ‖M⁻¹ b‖`.
pub fn gmres<A, P>(
    apply: A,
    precond: P,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let pb = precond(b);
    let target = rel_tol * norm(&pb);
    let mut total = 0;
    let mut res = f64::INFINITY;
    while total < max_iter {
        let ax = apply(x);
        let r0: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let r = precond(&r0);
        let beta = norm(&r);
        res = beta;
        if beta <= target || beta == 0.0 {
            break;
        }
        let m = restart.min(max_iter - total);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|x| x / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            total += 1;
            let mut w = precond(&apply(&v[k]));
            for (j, vj) in v.iter().enumerate() {
                let hjk = dot(&w, vj);
                h[j][k] = hjk;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hjk * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            res = g[k + 1].abs();
            if res <= target || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * v[j][i];
            }
        }
        if res <= target {
            break;
        }
    }
    GmresOutcome { iterations: total, residual: res }
}
