use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, RectDomain};

/// Uniform `nx × ny` mesh; cell `(i, j)` has center `origin + ((i+½)hx, (j+½)hy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub origin: Point2,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, origin: Point2) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::domain("grid needs at least one cell per axis"));
        }
        if !(hx > 0.0 && hx.is_finite() && hy > 0.0 && hy.is_finite()) || !origin.is_finite() {
            return Err(Error::domain(format!(
                "invalid grid spacing ({hx}, {hy}) or origin {origin:?}"
            )));
        }
        Ok(Grid2D {
            nx,
            ny,
            hx,
            hy,
            origin,
        })
    }

    /// `nx × ny` cells spanning `domain` exactly.
    pub fn over(domain: &RectDomain, nx: usize, ny: usize) -> Result<Self> {
        Grid2D::new(
            nx,
            ny,
            domain.width() / nx as f64,
            domain.height() / ny as f64,
            domain.lower(),
        )
    }

    /// `n × n` cells on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Grid2D::over(&RectDomain::unit_square(), n, n)
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x1 + (i as f64 + 0.5) * self.hx,
            self.origin.x2 + (j as f64 + 0.5) * self.hy,
        )
    }

    pub fn cell_rect(&self, i: usize, j: usize) -> RectDomain {
        let lo = Point2::new(
            self.origin.x1 + i as f64 * self.hx,
            self.origin.x2 + j as f64 * self.hy,
        );
        let hi = Point2::new(lo.x1 + self.hx, lo.x2 + self.hy);
        RectDomain::new(lo, hi).expect("positive spacing")
    }

    pub fn domain(&self) -> RectDomain {
        let hi = Point2::new(
            self.origin.x1 + self.nx as f64 * self.hx,
            self.origin.x2 + self.ny as f64 * self.hy,
        );
        RectDomain::new(self.origin, hi).expect("positive spacing")
    }

    /// Cell containing `p` (cells are half-open; the upper boundary maps to the last cell).
    pub fn locate(&self, p: &Point2) -> Option<(usize, usize)> {
        if !self.domain().contains(p) {
            return None;
        }
        let i = (((p.x1 - self.origin.x1) / self.hx).floor() as usize).min(self.nx - 1);
        let j = (((p.x2 - self.origin.x2) / self.hy).floor() as usize).min(self.ny - 1);
        Some((i, j))
    }

    /// Integer factor by which `fine` refines `self` over the same domain.
    pub fn refinement_factor(&self, fine: &Grid2D) -> Option<usize> {
        if fine.nx % self.nx != 0 || fine.ny % self.ny != 0 {
            return None;
        }
        let (rx, ry) = (fine.nx / self.nx, fine.ny / self.ny);
        if rx != ry {
            return None;
        }
        let (a, b) = (self.domain(), fine.domain());
        let tol = 1e-12 * a.diameter();
        let same = a.lower().distance(&b.lower()) <= tol && a.upper().distance(&b.upper()) <= tol;
        same.then_some(rx)
    }
}

/// Cell-averaged scalar quantity (flux or source) on a [`Grid2D`], row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::domain(format!(
                "field has {} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("field values must be finite"));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.cells()],
        }
    }

    pub fn zeros(grid: Grid2D) -> Self {
        ScalarField::constant(grid, 0.0)
    }

    pub fn from_fn<F: Fn(usize, usize) -> f64>(grid: Grid2D, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(i, j));
            }
        }
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ value · cell area`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
