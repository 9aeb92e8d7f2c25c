use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Material;
use crate::ordinates::DiscreteOrdinateSet;
use crate::parallel::Execution;

use super::grid::{Grid2D, ScalarField};
use super::sweep::{is_stable_direction, sweep_with, SweepTally};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative L∞ change between iterates at which iteration stops.
    pub si_tol: f64,
    pub max_iterations: usize,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            si_tol: 1e-10,
            max_iterations: 10_000,
            execution: Execution::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.si_tol > 0.0 && self.si_tol.is_finite()) {
            return Err(Error::domain(format!(
                "si_tol must be positive, got {}",
                self.si_tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::domain("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

/// External source `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceTerm {
    Uniform(f64),
    Field(ScalarField),
    /// One cell-averaged field per ordinate, in quadrature order (manufactured solutions).
    Angular(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub material: Material,
    pub source: SourceTerm,
    pub sn_order: usize,
    pub grid: Grid2D,
}

impl CaseConfig {
    pub fn uniform(material: Material, source: f64, sn_order: usize, grid: Grid2D) -> Self {
        CaseConfig {
            material,
            source: SourceTerm::Uniform(source),
            sn_order,
            grid,
        }
    }

    fn validate(&self, quad: &DiscreteOrdinateSet) -> Result<()> {
        self.material.validate()?;
        if quad.order() != self.sn_order {
            return Err(Error::precondition(format!(
                "case asks for S{} but the quadrature is S{}",
                self.sn_order,
                quad.order()
            )));
        }
        match &self.source {
            SourceTerm::Uniform(f) => {
                if !(f.is_finite() && *f >= 0.0) {
                    return Err(Error::domain(format!(
                        "source must be finite and nonnegative, got {f}"
                    )));
                }
            }
            SourceTerm::Field(f) => {
                if f.grid() != &self.grid {
                    return Err(Error::domain("source field lives on a different grid"));
                }
                if f.min() < 0.0 {
                    return Err(Error::domain("source field must be nonnegative"));
                }
            }
            // Manufactured sources are signed by construction.
            SourceTerm::Angular(fields) => {
                if fields.len() != quad.len() || fields.iter().any(|f| f.len() != self.grid.cells())
                {
                    return Err(Error::domain(
                        "angular source must hold one full field per ordinate",
                    ));
                }
                if fields.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::domain("angular source must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Total external source `Σ w_m Σ f_m h²` (quadrature-weighted for angular sources).
    fn total_source(&self, quad: &DiscreteOrdinateSet) -> f64 {
        let area = self.grid.cell_area();
        match &self.source {
            SourceTerm::Uniform(f) => f * area * self.grid.cells() as f64,
            SourceTerm::Field(f) => f.integral(),
            SourceTerm::Angular(fields) => {
                fields
                    .iter()
                    .zip(quad.directions())
                    .map(|(f, d)| d.weight * f.iter().sum::<f64>())
                    .sum::<f64>()
                    * area
            }
        }
    }
}

/// Particle balance of the final sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub source: f64,
    pub absorption: f64,
    pub leakage: f64,
    /// `|absorption + leakage − source| / source` (absolute when the source is zero).
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    /// Negative cell counts of the final sweep, summed over ordinates.
    pub negative_flux_count: usize,
    /// Ordinates violating `h ≤ 2|μ|/σ` on this mesh.
    pub unstable_directions: usize,
    pub balance: BalanceReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnSolution {
    pub phi: ScalarField,
    pub stats: IterationStats,
}

enum Emission<'a> {
    Shared(&'a [f64]),
    PerDirection {
        scatter: &'a [f64],
        sources: &'a [Vec<f64>],
    },
}

impl Emission<'_> {
    fn for_direction<'b>(&'b self, m: usize, buf: &'b mut Vec<f64>) -> &'b [f64] {
        match self {
            Emission::Shared(q) => q,
            Emission::PerDirection { scatter, sources } => {
                buf.clear();
                buf.extend(scatter.iter().zip(&sources[m]).map(|(s, f)| s + f));
                buf
            }
        }
    }
}

/// One transport sweep over every ordinate; returns `Σ_m w_m ψ_m` accumulated in ordinate order.
fn sweep_all(
    grid: &Grid2D,
    sigma_t: f64,
    quad: &DiscreteOrdinateSet,
    emission: &Emission<'_>,
    execution: Execution,
) -> (Vec<f64>, SweepTally) {
    let dirs = quad.directions();
    let mut phi = vec![0.0; grid.cells()];
    let mut total = SweepTally::default();
    let workers = execution.workers();
    if workers <= 1 {
        let mut buf = Vec::new();
        for (m, d) in dirs.iter().enumerate() {
            let q = emission.for_direction(m, &mut buf);
            let w = d.weight;
            let t = sweep_with(grid, sigma_t, d.mu, d.eta, q, |c, psi| phi[c] += w * psi);
            total.negative_cells += t.negative_cells;
            total.leakage += w * t.leakage;
        }
        return (phi, total);
    }
    for start in (0..dirs.len()).step_by(workers) {
        let count = workers.min(dirs.len() - start);
        let batch = execution.map_range(count, |k| {
            let m = start + k;
            let d = &dirs[m];
            let mut buf = Vec::new();
            let q = emission.for_direction(m, &mut buf);
            let mut psi = vec![0.0; grid.cells()];
            let t = sweep_with(grid, sigma_t, d.mu, d.eta, q, |c, v| psi[c] = v);
            (psi, t)
        });
        for (k, (psi, t)) in batch.into_iter().enumerate() {
            let w = dirs[start + k].weight;
            phi.iter_mut().zip(&psi).for_each(|(p, v)| *p += w * v);
            total.negative_cells += t.negative_cells;
            total.leakage += w * t.leakage;
        }
    }
    (phi, total)
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let scale = new.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = new
        .iter()
        .zip(old)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Source iteration `φ^{k+1} = Σ_m w_m S_m[σ_s φ^k + f]` from `φ⁰ = 0`.
pub fn source_iteration(
    case: &CaseConfig,
    quad: &DiscreteOrdinateSet,
    cfg: &SolverConfig,
) -> Result<SnSolution> {
    case.validate(quad)?;
    cfg.validate()?;
    let grid = case.grid;
    let n = grid.cells();
    let Material { sigma_t, sigma_s } = case.material;

    let (base, angular): (Vec<f64>, Option<&[Vec<f64>]>) = match &case.source {
        SourceTerm::Uniform(f) => (vec![*f; n], None),
        SourceTerm::Field(f) => (f.values().to_vec(), None),
        SourceTerm::Angular(fields) => (vec![0.0; n], Some(fields.as_slice())),
    };

    let mut phi = vec![0.0; n];
    let mut emission = vec![0.0; n];
    let mut history = Vec::new();
    for it in 1..=cfg.max_iterations {
        for ((e, p), f) in emission.iter_mut().zip(&phi).zip(&base) {
            *e = sigma_s * p + f;
        }
        let em = match angular {
            None => Emission::Shared(&emission),
            Some(sources) => Emission::PerDirection {
                scatter: &emission,
                sources,
            },
        };
        let (next, tally) = sweep_all(&grid, sigma_t, quad, &em, cfg.execution);
        let residual = relative_change(&next, &phi);
        history.push(residual);
        let previous = std::mem::replace(&mut phi, next);
        if residual <= cfg.si_tol {
            let source = case.total_source(quad);
            let area = grid.cell_area();
            let collided: f64 = phi.iter().sum::<f64>() * area;
            let scattered_in: f64 = previous.iter().sum::<f64>() * area;
            // The last sweep used φ^k for in-scattering; attribute the mismatch to absorption.
            let absorption = sigma_t * collided - sigma_s * scattered_in;
            let imbalance = (absorption + tally.leakage - source).abs();
            let balance = BalanceReport {
                source,
                absorption,
                leakage: tally.leakage,
                relative_residual: if source != 0.0 {
                    imbalance / source.abs()
                } else {
                    imbalance
                },
            };
            let unstable = quad
                .directions()
                .iter()
                .filter(|d| !is_stable_direction(&grid, sigma_t, d.mu, d.eta))
                .count();
            return Ok(SnSolution {
                phi: ScalarField::new(grid, phi)?,
                stats: IterationStats {
                    iterations: it,
                    final_residual: residual,
                    residual_history: history,
                    negative_flux_count: tally.negative_cells,
                    unstable_directions: unstable,
                    balance,
                },
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        residuals: history,
        last_iterate: phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinates::level_symmetric;

    fn solve(sigma_t: f64, sigma_s: f64, n: usize, order: usize, exec: Execution) -> SnSolution {
        let case = CaseConfig::uniform(
            Material::new(sigma_t, sigma_s).unwrap(),
            1.0,
            order,
            Grid2D::unit_square(n).unwrap(),
        );
        let cfg = SolverConfig {
            execution: exec,
            ..Default::default()
        };
        source_iteration(&case, &level_symmetric(order).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn pure_absorber_converges_in_two_iterations() {
        let s = solve(1.0, 0.0, 8, 4, Execution::Sequential);
        assert_eq!(s.stats.iterations, 2);
        assert_eq!(s.stats.final_residual, 0.0);
    }

    #[test]
    fn policies_are_bit_identical() {
        let a = solve(1.0, 0.8, 12, 6, Execution::Sequential);
        let b = solve(1.0, 0.8, 12, 6, Execution::Parallel);
        assert_eq!(a.phi, b.phi);
        assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn balance_holds() {
        let s = solve(1.0, 0.8, 10, 8, Execution::Sequential);
        assert!(
            s.stats.balance.relative_residual < 1e-9,
            "{:?}",
            s.stats.balance
        );
    }

    #[test]
    fn non_convergence_is_reported() {
        let case = CaseConfig::uniform(
            Material::new(1.0, 0.99).unwrap(),
            1.0,
            2,
            Grid2D::unit_square(4).unwrap(),
        );
        let cfg = SolverConfig {
            max_iterations: 3,
            ..Default::default()
        };
        match source_iteration(&case, &level_symmetric(2).unwrap(), &cfg) {
            Err(Error::NonConvergence {
                iterations,
                residuals,
                last_iterate,
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(residuals.len(), 3);
                assert_eq!(last_iterate.len(), 16);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn order_mismatch_rejected() {
        let case = CaseConfig::uniform(
            Material::new(1.0, 0.0).unwrap(),
            1.0,
            4,
            Grid2D::unit_square(4).unwrap(),
        );
        assert!(source_iteration(
            &case,
            &level_symmetric(2).unwrap(),
            &SolverConfig::default()
        )
        .is_err());
    }
}
