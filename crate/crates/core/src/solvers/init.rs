//! Initial data for the descent solvers.

use rand::Rng;
use std::f64::consts::PI;

use crate::grid::{Grid, ScalarField, StatePair};

/// `|Σ_{k,l ≤ 3} c_kl sin(kπx/lx) sin(lπy/ly)|` with a dominant first mode.
pub fn random_positive<R: Rng>(grid: &Grid, rng: &mut R) -> ScalarField {
    let mut c = [[0.0; 3]; 3];
    for (k, row) in c.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            *v = if k == 0 && l == 0 {
                rng.gen_range(0.5..1.5)
            } else {
                rng.gen_range(-0.5..0.5) / ((k + 1) * (l + 1)) as f64
            };
        }
    }
    let (lx, ly) = (grid.spec().lx, grid.spec().ly);
    grid.sample(|x, y| {
        let mut s = 0.0;
        for (k, row) in c.iter().enumerate() {
            let sx = ((k + 1) as f64 * PI * x / lx).sin();
            for (l, v) in row.iter().enumerate() {
                s += v * sx * ((l + 1) as f64 * PI * y / ly).sin();
            }
        }
        s.abs()
    })
}

pub fn random_pair<R: Rng>(grid: &Grid, rng: &mut R) -> StatePair {
    let a = random_positive(grid, rng);
    let b = random_positive(grid, rng);
    StatePair::new(a, b)
}

/// Random positive data split across a random line through the centre by a
/// smooth step, one side per component.
pub fn random_segregated_pair<R: Rng>(grid: &Grid, rng: &mut R) -> StatePair {
    let a = random_positive(grid, rng);
    let b = random_positive(grid, rng);
    let angle = rng.gen_range(0.0..2.0 * PI);
    let (nx, ny) = (angle.cos(), angle.sin());
    let (cx, cy) = (0.5 * grid.spec().lx, 0.5 * grid.spec().ly);
    let width = 0.05 * grid.spec().lx.min(grid.spec().ly);
    let step = grid.sample(|x, y| 1.0 / (1.0 + (-((x - cx) * nx + (y - cy) * ny) / width).exp()));
    let u1 = ScalarField::from_vec(a.as_slice().iter().zip(step.as_slice()).map(|(v, s)| v * (1.0 - s)).collect());
    let u2 = ScalarField::from_vec(b.as_slice().iter().zip(step.as_slice()).map(|(v, s)| v * s).collect());
    StatePair::new(u1, u2)
}

/// Gaussian bump of width `lx/8` centred at `(cx, cy)`, sampled at the interior nodes.
pub fn bump(grid: &Grid, cx: f64, cy: f64) -> ScalarField {
    let width = grid.spec().lx / 8.0;
    grid.sample(|x, y| (-((x - cx).powi(2) + (y - cy).powi(2)) / (width * width)).exp())
}

/// Bumps at `(lx/4, ly/2)` and `(3lx/4, ly/2)`.
pub fn segregated_pair(grid: &Grid) -> StatePair {
    let (lx, ly) = (grid.spec().lx, grid.spec().ly);
    StatePair::new(bump(grid, 0.25 * lx, 0.5 * ly), bump(grid, 0.75 * lx, 0.5 * ly))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_data_is_positive_and_reproducible() {
        let g = Grid::new(GridSpec::unit_square(15)).unwrap();
        let a = random_positive(&g, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_positive(&g, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert!(a.min() >= 0.0 && a.max() > 0.0);
    }

    #[test]
    fn bumps_are_mirror_images() {
        let g = Grid::new(GridSpec::unit_square(15)).unwrap();
        let s = segregated_pair(&g);
        for j in 0..15 {
            for i in 0..15 {
                let a = s.u1[g.node_index(i, j)];
                let b = s.u2[g.node_index(14 - i, j)];
                assert!((a - b).abs() < 1e-14);
            }
        }
    }
}
