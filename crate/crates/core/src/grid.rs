//! Uniform discretization of a rectangle with implicit zero Dirichlet boundary.
//!
//! Unknowns live on the `nx × ny` interior nodes, stored row-major
//! (`k = j * nx + i`, `i` along x). Every integral is a midpoint rule over the
//! `(nx + 1) × (ny + 1)` cells, with the field replaced by its bilinear
//! interpolant: the cell-center value is the mean of the four corner values
//! and the cell-center gradient is the gradient of the bilinear patch there.
//! Boundary corners are read as zero and never stored.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Size and extent of the rectangle `(0, lx) × (0, ly)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        Self { nx, ny, lx, ly }
    }

    /// Unit square with `n × n` interior nodes.
    pub fn unit_square(n: usize) -> Self {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 interior nodes per direction, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.lx.is_finite() && self.lx > 0.0 && self.ly.is_finite() && self.ly > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "domain extents must be positive and finite, got lx={} ly={}",
                self.lx, self.ly
            )));
        }
        Ok(())
    }
}

/// One sample of a field at a cell center.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellSample {
    pub value: f64,
    pub gx: f64,
    pub gy: f64,
}

impl CellSample {
    #[inline]
    pub fn grad_sq(&self) -> f64 {
        self.gx * self.gx + self.gy * self.gy
    }
}

/// A scalar quantity sampled at cell centers.
pub type CellField = Vec<f64>;

/// A validated grid: spacings, node coordinates and the cell layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    hx: f64,
    hy: f64,
}

pub fn build_grid(spec: GridSpec) -> Result<Grid> {
    Grid::new(spec)
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            hx: spec.lx / (spec.nx + 1) as f64,
            hy: spec.ly / (spec.ny + 1) as f64,
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }
    pub fn nx(&self) -> usize {
        self.spec.nx
    }
    pub fn ny(&self) -> usize {
        self.spec.ny
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }
    /// Area of one cell, also the lumped volume of one node.
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }
    pub fn node_count(&self) -> usize {
        self.spec.nx * self.spec.ny
    }
    pub fn cell_count(&self) -> usize {
        (self.spec.nx + 1) * (self.spec.ny + 1)
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.spec.nx + i
    }

    /// Coordinates of interior node `(i, j)`.
    pub fn node_coords(&self, i: usize, j: usize) -> (f64, f64) {
        ((i + 1) as f64 * self.hx, (j + 1) as f64 * self.hy)
    }

    /// Coordinates of the center of cell `(a, b)`, `0 ≤ a ≤ nx`, `0 ≤ b ≤ ny`.
    pub fn cell_center(&self, a: usize, b: usize) -> (f64, f64) {
        ((a as f64 + 0.5) * self.hx, (b as f64 + 0.5) * self.hy)
    }

    /// Samples `f` at every interior node.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> ScalarField {
        let mut values = Vec::with_capacity(self.node_count());
        for j in 0..self.ny() {
            for i in 0..self.nx() {
                let (x, y) = self.node_coords(i, j);
                values.push(f(x, y));
            }
        }
        ScalarField::from_vec(values)
    }

    /// Samples `f` at every cell center.
    pub fn sample_cells<F: Fn(f64, f64) -> f64>(&self, f: F) -> CellField {
        let mut out = Vec::with_capacity(self.cell_count());
        for b in 0..=self.ny() {
            for a in 0..=self.nx() {
                let (x, y) = self.cell_center(a, b);
                out.push(f(x, y));
            }
        }
        out
    }

    pub fn zeros(&self) -> ScalarField {
        ScalarField::zeros(self.node_count())
    }

    pub fn check(&self, f: &ScalarField) -> Result<()> {
        if f.len() != self.node_count() {
            return Err(Error::GridMismatch {
                expected: self.node_count(),
                found: f.len(),
            });
        }
        Ok(())
    }

    pub fn check_pair(&self, u: &StatePair) -> Result<()> {
        self.check(&u.u1)?;
        self.check(&u.u2)
    }

    /// Midpoint rule over cells: `Σ f(cell) · hx · hy`, summed in cell order.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.cell_count());
        f.iter().sum::<f64>() * self.cell_area()
    }

    /// The four corner values of cell `(a, b)` as `[bl, br, tl, tr]`.
    #[inline]
    fn corners(&self, values: &[f64], a: usize, b: usize) -> [f64; 4] {
        let nx = self.spec.nx;
        let ny = self.spec.ny;
        let at = |i: usize, j: usize| -> f64 {
            // i, j are padded indices; 0 and n + 1 are boundary nodes.
            if i == 0 || j == 0 || i > nx || j > ny {
                0.0
            } else {
                values[(j - 1) * nx + (i - 1)]
            }
        };
        [at(a, b), at(a + 1, b), at(a, b + 1), at(a + 1, b + 1)]
    }

    /// Bilinear cell-center value and gradient for every cell.
    pub fn cell_samples(&self, field: &ScalarField) -> Vec<CellSample> {
        let inv2hx = 0.5 / self.hx;
        let inv2hy = 0.5 / self.hy;
        let mut out = Vec::with_capacity(self.cell_count());
        for b in 0..=self.ny() {
            for a in 0..=self.nx() {
                let [bl, br, tl, tr] = self.corners(&field.values, a, b);
                out.push(CellSample {
                    value: 0.25 * (bl + br + tl + tr),
                    gx: ((br + tr) - (bl + tl)) * inv2hx,
                    gy: ((tl + tr) - (bl + br)) * inv2hy,
                });
            }
        }
        out
    }

    /// Cell-center values of the bilinear interpolant.
    pub fn cell_values(&self, field: &ScalarField) -> CellField {
        self.cell_samples(field).iter().map(|s| s.value).collect()
    }

    /// Squared norm of the bilinear-interpolant gradient at each cell center.
    pub fn grad_sq(&self, field: &ScalarField) -> CellField {
        self.cell_samples(field).iter().map(CellSample::grad_sq).collect()
    }

    /// `∫ f g` with both factors replaced by their cell-center values.
    pub fn l2_inner(&self, f: &ScalarField, g: &ScalarField) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        let fc = self.cell_values(f);
        let gc = self.cell_values(g);
        let prod: Vec<f64> = fc.iter().zip(&gc).map(|(a, b)| a * b).collect();
        Ok(self.integrate(&prod))
    }

    /// `∫ |∇f|²` under the cell quadrature.
    pub fn dirichlet_norm_sq(&self, f: &ScalarField) -> f64 {
        self.integrate(&self.grad_sq(f))
    }

    /// Adjoint of [`Grid::cell_samples`]: given per-cell sensitivities with
    /// respect to the center value and the two gradient components, adds the
    /// induced nodal sensitivities into `out`.
    pub fn scatter(&self, cells: &[CellSample], out: &mut [f64]) {
        debug_assert_eq!(cells.len(), self.cell_count());
        debug_assert_eq!(out.len(), self.node_count());
        let nx = self.spec.nx;
        let ny = self.spec.ny;
        let inv2hx = 0.5 / self.hx;
        let inv2hy = 0.5 / self.hy;
        let mut c = 0;
        for b in 0..=ny {
            for a in 0..=nx {
                let s = cells[c];
                c += 1;
                let v = 0.25 * s.value;
                let x = s.gx * inv2hx;
                let y = s.gy * inv2hy;
                // corners in padded indices: (a, b) bl, (a+1, b) br, (a, b+1) tl, (a+1, b+1) tr
                let contrib = [v - x - y, v + x - y, v - x + y, v + x + y];
                let pos = [(a, b), (a + 1, b), (a, b + 1), (a + 1, b + 1)];
                for (&(i, j), d) in pos.iter().zip(contrib) {
                    if i >= 1 && j >= 1 && i <= nx && j <= ny {
                        out[(j - 1) * nx + (i - 1)] += d;
                    }
                }
            }
        }
    }

    /// Applies the quadrature stiffness matrix: `(K v)_k = ∂/∂v_k ½∫|∇v|²`.
    pub fn apply_stiffness(&self, v: &ScalarField) -> ScalarField {
        let w = self.cell_area();
        let cells: Vec<CellSample> = self
            .cell_samples(v)
            .into_iter()
            .map(|s| CellSample {
                value: 0.0,
                gx: w * s.gx,
                gy: w * s.gy,
            })
            .collect();
        let mut out = vec![0.0; self.node_count()];
        self.scatter(&cells, &mut out);
        ScalarField::from_vec(out)
    }

    /// Applies the standard 5-point stencil of `-Δ` with zero boundary values.
    pub fn apply_neg_laplacian(&self, v: &[f64], out: &mut [f64]) {
        let nx = self.nx();
        let ny = self.ny();
        let cx = 1.0 / (self.hx * self.hx);
        let cy = 1.0 / (self.hy * self.hy);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let c = v[k];
                let w = if i > 0 { v[k - 1] } else { 0.0 };
                let e = if i + 1 < nx { v[k + 1] } else { 0.0 };
                let s = if j > 0 { v[k - nx] } else { 0.0 };
                let n = if j + 1 < ny { v[k + nx] } else { 0.0 };
                out[k] = cx * (2.0 * c - w - e) + cy * (2.0 * c - s - n);
            }
        }
    }

    /// Writes `field` in the plain-text dump format.
    pub fn write_field<W: Write>(&self, field: &ScalarField, mut w: W) -> Result<()> {
        self.check(field)?;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "FIELD {} {} {:.16e} {:.16e}",
            self.nx(),
            self.ny(),
            self.spec.lx,
            self.spec.ly
        );
        for j in 0..self.ny() {
            for i in 0..self.nx() {
                let (x, y) = self.node_coords(i, j);
                let _ = writeln!(
                    s,
                    "{} {} {:.16e} {:.16e} {:.16e}",
                    i,
                    j,
                    x,
                    y,
                    field[self.node_index(i, j)]
                );
            }
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }
}

/// Reads a field dump, returning the grid it was written on and the values.
pub fn read_field<R: BufRead>(r: R) -> Result<(Grid, ScalarField)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, message: "empty field dump".into() })??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "FIELD" {
        return Err(Error::Parse { line: 1, message: format!("bad header `{header}`") });
    }
    let bad = |line: usize, m: &str| Error::Parse { line, message: m.to_string() };
    let nx: usize = parts[1].parse().map_err(|_| bad(1, "bad nx"))?;
    let ny: usize = parts[2].parse().map_err(|_| bad(1, "bad ny"))?;
    let lx: f64 = parts[3].parse().map_err(|_| bad(1, "bad lx"))?;
    let ly: f64 = parts[4].parse().map_err(|_| bad(1, "bad ly"))?;
    let grid = Grid::new(GridSpec::new(nx, ny, lx, ly))?;
    let mut values = vec![f64::NAN; grid.node_count()];
    let mut seen = 0;
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = n + 2;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 5 {
            return Err(bad(lineno, "expected `i j x y value`"));
        }
        let i: usize = cols[0].parse().map_err(|_| bad(lineno, "bad i"))?;
        let j: usize = cols[1].parse().map_err(|_| bad(lineno, "bad j"))?;
        let v: f64 = cols[4].parse().map_err(|_| bad(lineno, "bad value"))?;
        if i >= nx || j >= ny {
            return Err(bad(lineno, "node index out of range"));
        }
        values[grid.node_index(i, j)] = v;
        seen += 1;
    }
    if seen != grid.node_count() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad(0, "field dump is incomplete or has non-finite values"));
    }
    Ok((grid, ScalarField::from_vec(values)))
}

/// Nodal values of one component on the interior nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| c * v).collect() }
    }

    /// `self + c · other`
    pub fn axpy(&self, c: f64, other: &ScalarField) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
        }
    }

    pub fn dot(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
    pub fn abs(&self) -> Self {
        Self { values: self.values.iter().map(|v| v.abs()).collect() }
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.values[k]
    }
}

impl IndexMut<usize> for ScalarField {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.values[k]
    }
}

/// The pair `u = (u₁, u₂)` on one grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatePair {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl StatePair {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Self {
        Self { u1, u2 }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::new(grid.zeros(), grid.zeros())
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        match i {
            0 => &self.u1,
            _ => &self.u2,
        }
    }

    pub fn component_mut(&mut self, i: usize) -> &mut ScalarField {
        match i {
            0 => &mut self.u1,
            _ => &mut self.u2,
        }
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.u2.clone(), self.u1.clone())
    }

    /// Componentwise rescaling `(t₁ u₁, t₂ u₂)`.
    pub fn scaled(&self, t1: f64, t2: f64) -> Self {
        Self::new(self.u1.scaled(t1), self.u2.scaled(t2))
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0, -1.0)
    }

    pub fn axpy(&self, c: f64, other: &StatePair) -> Self {
        Self::new(self.u1.axpy(c, &other.u1), self.u2.axpy(c, &other.u2))
    }

    pub fn dot(&self, other: &StatePair) -> f64 {
        self.u1.dot(&other.u1) + self.u2.dot(&other.u2)
    }

    pub fn max_abs(&self) -> f64 {
        self.u1.max_abs().max(self.u2.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }
}
