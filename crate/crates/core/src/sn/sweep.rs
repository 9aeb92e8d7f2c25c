use crate::error::{Error, Result};
use crate::kernel::Material;

use super::grid::{Grid2D, ScalarField};

/// Per-direction diagnostics of one sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SweepTally {
    /// Cells where the center value or either outgoing face value is negative.
    pub negative_cells: usize,
    /// Outgoing face integral `Σ |μ| hy ψ_out,x + Σ |η| hx ψ_out,y` over the boundary.
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub psi: ScalarField,
    pub negative_count: usize,
    pub leakage: f64,
    /// Whether both `hx ≤ 2|μ|/σ` and `hy ≤ 2|η|/σ` hold.
    pub stable: bool,
}

/// Mesh condition under which DD cannot produce negative values from a nonnegative source.
pub fn is_stable_direction(grid: &Grid2D, sigma_t: f64, mu: f64, eta: f64) -> bool {
    grid.hx * sigma_t <= 2.0 * mu.abs() && grid.hy * sigma_t <= 2.0 * eta.abs()
}

/// Diamond Difference sweep for one direction with vacuum inflow.
///
/// `sink(cell, psi_c)` receives every cell's center value in sweep order. Cells are
/// visited row by row starting at the upwind corner.
pub fn sweep_with<S: FnMut(usize, f64)>(
    grid: &Grid2D,
    sigma_t: f64,
    mu: f64,
    eta: f64,
    emission: &[f64],
    mut sink: S,
) -> SweepTally {
    debug_assert_eq!(emission.len(), grid.cells());
    let (nx, ny) = (grid.nx, grid.ny);
    let ax = 2.0 * mu.abs() / grid.hx;
    let ay = 2.0 * eta.abs() / grid.hy;
    let inv = 1.0 / (sigma_t + ax + ay);
    let forward_x = mu > 0.0;
    let forward_y = eta > 0.0;

    let mut psi_y = vec![0.0; nx];
    let mut negative = 0usize;
    let mut leak_x = 0.0;
    for jj in 0..ny {
        let j = if forward_y { jj } else { ny - 1 - jj };
        let row = &emission[j * nx..(j + 1) * nx];
        let mut psi_x = 0.0;
        for ii in 0..nx {
            let i = if forward_x { ii } else { nx - 1 - ii };
            let below = psi_y[i];
            let psi_c = (row[i] + ax * psi_x + ay * below) * inv;
            psi_x = 2.0 * psi_c - psi_x;
            let top = 2.0 * psi_c - below;
            psi_y[i] = top;
            negative += (psi_c < 0.0 || psi_x < 0.0 || top < 0.0) as usize;
            sink(j * nx + i, psi_c);
        }
        leak_x += psi_x;
    }
    let leak_y: f64 = psi_y.iter().sum();
    SweepTally {
        negative_cells: negative,
        leakage: mu.abs() * grid.hy * leak_x + eta.abs() * grid.hx * leak_y,
    }
}

/// Sweeps one direction and returns the field of cell-center angular flux.
pub fn dd_sweep(
    grid: &Grid2D,
    m: &Material,
    direction: (f64, f64),
    emission: &ScalarField,
) -> Result<SweepResult> {
    m.validate()?;
    let (mu, eta) = direction;
    if !(mu.is_finite() && eta.is_finite()) || mu == 0.0 || eta == 0.0 {
        return Err(Error::domain(format!(
            "direction ({mu}, {eta}) must have nonzero finite cosines"
        )));
    }
    if emission.grid() != grid {
        return Err(Error::domain("emission field lives on a different grid"));
    }
    let mut psi = vec![0.0; grid.cells()];
    let tally = sweep_with(grid, m.sigma_t, mu, eta, emission.values(), |c, v| {
        psi[c] = v
    });
    Ok(SweepResult {
        psi: ScalarField::new(*grid, psi)?,
        negative_count: tally.negative_cells,
        leakage: tally.leakage,
        stable: is_stable_direction(grid, m.sigma_t, mu, eta),
    })
}
