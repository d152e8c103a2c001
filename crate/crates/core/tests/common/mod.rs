#![allow(dead_code)]

use coupled_nehari::grid::{Grid, ScalarField, StatePair};
use coupled_nehari::solvers::init;
use coupled_nehari::Problem;
use rand::Rng;

/// Positive random pair with amplitudes drawn from `[lo, hi]`.
pub fn random_pair<R: Rng>(grid: &Grid, rng: &mut R, lo: f64, hi: f64) -> StatePair {
    let a = init::random_positive(grid, rng).scaled(rng.gen_range(lo..hi));
    let b = init::random_positive(grid, rng).scaled(rng.gen_range(lo..hi));
    StatePair::new(a, b)
}

/// Partially segregated random pair with amplitudes drawn from `[lo, hi]`.
pub fn random_segregated<R: Rng>(grid: &Grid, rng: &mut R, lo: f64, hi: f64) -> StatePair {
    let s = init::random_segregated_pair(grid, rng);
    let (a, b) = (rng.gen_range(lo..hi), rng.gen_range(lo..hi));
    s.scaled(a, b)
}

/// Fourth-order central difference of `f` at 0 with step `h`.
pub fn diff4(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
}

/// `∂E/∂u_{comp,k}` by differences of the total energy.
pub fn energy_partial(problem: &Problem, u: &StatePair, comp: usize, k: usize, h: f64) -> f64 {
    diff4(
        |d| {
            let mut v = u.clone();
            v.component_mut(comp)[k] += d;
            problem.total_energy(&v).unwrap()
        },
        h,
    )
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Ground state level of the discrete semilinear problem `K u = N(u)` with
/// `N(u)_k = Σ_{cells ∋ k} w ū³/4` on a square grid, by Petviashvili
/// iteration. Here `K` is the quadrature stiffness, which on a square grid is
/// the rotated stencil `2u_k − ½ Σ diagonal neighbours`. Written against the
/// stencil directly, without the library's assembly. Returns `(level, u)`.
pub fn petviashvili_ground_state(n: usize, iters: usize) -> (f64, Vec<f64>) {
    let h = 1.0 / (n + 1) as f64;
    let w = h * h;
    let at = |u: &[f64], i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
            0.0
        } else {
            u[j as usize * n + i as usize]
        }
    };
    let stiff = |u: &[f64], out: &mut [f64]| {
        for j in 0..n as isize {
            for i in 0..n as isize {
                let diag = at(u, i - 1, j - 1) + at(u, i + 1, j - 1) + at(u, i - 1, j + 1) + at(u, i + 1, j + 1);
                out[j as usize * n + i as usize] = 2.0 * at(u, i, j) - 0.5 * diag;
            }
        }
    };
    let nonlinear = |u: &[f64]| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; n * n];
        let mut quartic = 0.0;
        for b in -1..n as isize {
            for a in -1..n as isize {
                let m = 0.25 * (at(u, a, b) + at(u, a + 1, b) + at(u, a, b + 1) + at(u, a + 1, b + 1));
                quartic += w * m.powi(4);
                let c = 0.25 * w * m.powi(3);
                for (i, j) in [(a, b), (a + 1, b), (a, b + 1), (a + 1, b + 1)] {
                    if i >= 0 && j >= 0 && i < n as isize && j < n as isize {
                        out[j as usize * n + i as usize] += c;
                    }
                }
            }
        }
        (out, quartic)
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let cg = |b: &[f64], x: &mut Vec<f64>| {
        let mut ax = vec![0.0; n * n];
        stiff(x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let target = 1e-28 * dot(b, b);
        let mut ap = vec![0.0; n * n];
        for _ in 0..20 * n * n {
            if rr <= target {
                break;
            }
            stiff(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for k in 0..n * n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rn = dot(&r, &r);
            for k in 0..n * n {
                p[k] = r[k] + rn / rr * p[k];
            }
            rr = rn;
        }
    };
    let mut u: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let (x, y) = ((i + 1) as f64 * h, (j + 1) as f64 * h);
            10.0 * x * (1.0 - x) * y * (1.0 - y)
        })
        .collect();
    let mut ku = vec![0.0; n * n];
    for _ in 0..iters {
        stiff(&u, &mut ku);
        let (nu, _) = nonlinear(&u);
        let m = dot(&u, &ku) / dot(&u, &nu);
        let mut next = u.clone();
        cg(&nu, &mut next);
        let factor = m.powf(1.5);
        let next: Vec<f64> = next.iter().map(|v| factor * v).collect();
        let change = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = next.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        u = next;
        if change <= 1e-13 * scale {
            break;
        }
    }
    stiff(&u, &mut ku);
    let (_, quartic) = nonlinear(&u);
    (0.5 * dot(&u, &ku) - 0.25 * quartic, u)
}

pub fn field(v: Vec<f64>) -> ScalarField {
    ScalarField::from_vec(v)
}
