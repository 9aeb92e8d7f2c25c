//! The Peierls equation `φ = σ_s T[φ] + T[f]` on a uniform grid, with
//! cell-averaged unknowns collocated at cell centers.
//!
//! On a uniform grid the first-flight transfer entry between two cells
//! depends only on their index offset, so the dense `(nx·ny)²` matrix is
//! stored as a `(2nx−1) × (2ny−1)` stencil. By reflection symmetry only the
//! `nx · ny` nonnegative offsets are integrated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::integrate::QuadratureSpec;
use crate::kernel::{polar_integral, transport_cell_integral, Material};
use crate::parallel::Execution;
use crate::sn::{Grid2D, ScalarField};

/// Largest Neumann iteration count before giving up.
pub const MAX_NEUMANN_ITERATIONS: usize = 100_000;

/// Transfer operator `tm_{ij} = ∫_{cell j} T(x_i, y) dy` in offset-stencil form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    grid: Grid2D,
    sigma_t: f64,
    /// Row-major over `(dj + ny − 1, di + nx − 1)` with `d = col − row`.
    stencil: Vec<f64>,
}

impl TransferMatrix {
    /// Rebuilds a matrix from a stored stencil (for example a cache entry).
    pub fn from_stencil(grid: Grid2D, sigma_t: f64, stencil: Vec<f64>) -> Result<Self> {
        if stencil.len() != (2 * grid.nx - 1) * (2 * grid.ny - 1) {
            return Err(Error::Format(format!(
                "stencil length {} does not fit the grid",
                stencil.len()
            )));
        }
        if stencil.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Format(
                "stencil entries must be finite and nonnegative".into(),
            ));
        }
        Ok(TransferMatrix {
            grid,
            sigma_t,
            stencil,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn sigma_t(&self) -> f64 {
        self.sigma_t
    }

    pub fn stencil(&self) -> &[f64] {
        &self.stencil
    }

    pub fn dim(&self) -> usize {
        self.grid.cells()
    }

    fn offset(&self, di: isize, dj: isize) -> f64 {
        let w = 2 * self.grid.nx - 1;
        let r = (dj + self.grid.ny as isize - 1) as usize;
        let c = (di + self.grid.nx as isize - 1) as usize;
        self.stencil[r * w + c]
    }

    /// Dense entry `(row, col)` in cell-index numbering.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let nx = self.grid.nx;
        let (ir, jr) = ((row % nx) as isize, (row / nx) as isize);
        let (ic, jc) = ((col % nx) as isize, (col / nx) as isize);
        self.offset(ic - ir, jc - jr)
    }

    pub fn row_sum(&self, row: usize) -> f64 {
        let mut out = 0.0;
        self.row_dot(row, &vec![1.0; self.dim()], &mut out);
        out
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim()).map(|r| self.row_sum(r)).fold(0.0, f64::max)
    }

    /// Dense copy; intended for small grids and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.entry(r, c)).collect())
            .collect()
    }

    fn row_dot(&self, row: usize, x: &[f64], out: &mut f64) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let w = 2 * nx - 1;
        let (ir, jr) = (row % nx, row / nx);
        let mut acc = 0.0;
        for jc in 0..ny {
            let r = jc + ny - 1 - jr;
            let start = r * w + (nx - 1 - ir);
            let coeffs = &self.stencil[start..start + nx];
            let xs = &x[jc * nx..(jc + 1) * nx];
            acc += coeffs.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
        }
        *out = acc;
    }

    /// `y = tm · x`, parallel over rows; each row is reduced in a fixed order.
    pub fn matvec(&self, x: &[f64], execution: Execution) -> Vec<f64> {
        assert_eq!(x.len(), self.dim(), "vector length must match the grid");
        let mut y = vec![0.0; self.dim()];
        let chunk = self.grid.nx.max(1);
        execution.for_each_chunk_mut(&mut y, chunk, |k, out| {
            for (r, v) in out.iter_mut().enumerate() {
                self.row_dot(k * chunk + r, x, v);
            }
        });
        y
    }
}

/// Integrates every distinct cell offset with [`transport_cell_integral`].
pub fn assemble_transfer_matrix(
    grid: &Grid2D,
    m: &Material,
    spec: &QuadratureSpec,
    execution: Execution,
) -> Result<TransferMatrix> {
    m.validate()?;
    spec.validate()?;
    let (nx, ny) = (grid.nx, grid.ny);
    let x0 = grid.cell_center(0, 0);
    let values = execution.map_range(nx * ny, |k| {
        let (di, dj) = (k % nx, k / nx);
        transport_cell_integral(m.sigma_t, &grid.cell_rect(di, dj), &x0, spec)
            .map(|e| e.value)
            .map_err(|e| Error::Assembly {
                row: 0,
                col: grid.index(di, dj),
                source: Box::new(e),
            })
    });
    let unique = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let w = 2 * nx - 1;
    let mut stencil = vec![0.0; w * (2 * ny - 1)];
    for r in 0..2 * ny - 1 {
        for c in 0..w {
            let di = (c as isize - (nx as isize - 1)).unsigned_abs();
            let dj = (r as isize - (ny as isize - 1)).unsigned_abs();
            stencil[r * w + c] = unique[dj * nx + di];
        }
    }
    Ok(TransferMatrix {
        grid: *grid,
        sigma_t: m.sigma_t,
        stencil,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannSolution {
    pub phi: ScalarField,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

/// Upper bound `ceil(log(tol (1 − c)) / log c) + 1` on the iteration count, `c = σ_s · max row sum`.
pub fn neumann_iteration_bound(tm: &TransferMatrix, m: &Material, tol: f64) -> usize {
    let c = m.sigma_s * tm.max_row_sum();
    if c <= 0.0 {
        return 1;
    }
    ((tol * (1.0 - c)).ln() / c.ln()).ceil() as usize + 1
}

/// Neumann iteration `φ^{k+1} = σ_s tm φ^k + tm f` from `φ⁰ = 0` until the
/// relative L∞ change is at most `tol`.
pub fn neumann_solve(
    tm: &TransferMatrix,
    m: &Material,
    f: &ScalarField,
    tol: f64,
    execution: Execution,
) -> Result<NeumannSolution> {
    m.validate()?;
    if m.sigma_s >= m.sigma_t {
        return Err(Error::precondition(
            "Neumann iteration requires σ_s < σ strictly",
        ));
    }
    if m.sigma_t != tm.sigma_t {
        return Err(Error::precondition(
            "material does not match the assembled transfer matrix",
        ));
    }
    if f.grid() != tm.grid() {
        return Err(Error::domain("source field lives on a different grid"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let uncollided = tm.matvec(f.values(), execution);
    if m.sigma_s == 0.0 {
        return Ok(NeumannSolution {
            phi: ScalarField::new(*tm.grid(), uncollided)?,
            iterations: 1,
            residuals: vec![],
        });
    }
    let mut phi = vec![0.0; tm.dim()];
    let mut residuals = Vec::new();
    for it in 1..=MAX_NEUMANN_ITERATIONS {
        let scattered = tm.matvec(&phi, execution);
        let next: Vec<f64> = scattered
            .iter()
            .zip(&uncollided)
            .map(|(s, u)| m.sigma_s * s + u)
            .collect();
        let scale = next.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = next
            .iter()
            .zip(&phi)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        let residual = if scale > 0.0 { diff / scale } else { diff };
        residuals.push(residual);
        phi = next;
        if residual <= tol {
            return Ok(NeumannSolution {
                phi: ScalarField::new(*tm.grid(), phi)?,
                iterations: it,
                residuals,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_NEUMANN_ITERATIONS,
        residuals,
        last_iterate: phi,
    })
}

fn check_pointwise(
    tm: &TransferMatrix,
    m: &Material,
    phi: &ScalarField,
    f: &ScalarField,
    x: &Point2,
) -> Result<()> {
    if m.sigma_t != tm.sigma_t {
        return Err(Error::precondition(
            "material does not match the assembled transfer matrix",
        ));
    }
    if phi.grid() != tm.grid() || f.grid() != tm.grid() {
        return Err(Error::domain("fields live on a different grid"));
    }
    if !tm.grid().domain().contains_strictly(x) {
        return Err(Error::domain(format!(
            "point {x:?} is not strictly inside the domain"
        )));
    }
    Ok(())
}

/// Nyström interpolant `σ_s Σ_j I_j(x) φ_j + Σ_j I_j(x) f_j` with `I_j(x) = ∫_{cell j} T(x, y) dy`.
///
/// When the emission `σ_s φ + f` is the same in every cell (pure absorbers
/// with a uniform source), the cell sum collapses to one polar integral over
/// the whole domain.
pub fn pointwise_flux(
    tm: &TransferMatrix,
    m: &Material,
    phi: &ScalarField,
    f: &ScalarField,
    x: &Point2,
    spec: &QuadratureSpec,
    execution: Execution,
) -> Result<f64> {
    check_pointwise(tm, m, phi, f, x)?;
    let emission: Vec<f64> = phi
        .values()
        .iter()
        .zip(f.values())
        .map(|(p, s)| m.sigma_s * p + s)
        .collect();
    let first = emission[0];
    if emission.iter().all(|&e| e == first) {
        return Ok(first * polar_integral(m.sigma_t, &tm.grid().domain(), x, spec)?.value);
    }
    cell_sum(tm, &emission, x, spec, execution)
}

/// [`pointwise_flux`] without the uniform-emission shortcut.
pub fn pointwise_flux_cellwise(
    tm: &TransferMatrix,
    m: &Material,
    phi: &ScalarField,
    f: &ScalarField,
    x: &Point2,
    spec: &QuadratureSpec,
    execution: Execution,
) -> Result<f64> {
    check_pointwise(tm, m, phi, f, x)?;
    let emission: Vec<f64> = phi
        .values()
        .iter()
        .zip(f.values())
        .map(|(p, s)| m.sigma_s * p + s)
        .collect();
    cell_sum(tm, &emission, x, spec, execution)
}

fn cell_sum(
    tm: &TransferMatrix,
    emission: &[f64],
    x: &Point2,
    spec: &QuadratureSpec,
    execution: Execution,
) -> Result<f64> {
    let grid = tm.grid();
    let terms = execution.map_range(grid.cells(), |c| {
        let rect = grid.cell_rect(c % grid.nx, c / grid.nx);
        transport_cell_integral(tm.sigma_t, &rect, x, spec).map(|e| e.value * emission[c])
    });
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total)
}
