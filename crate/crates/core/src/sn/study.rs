use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RectDomain;
use crate::kernel::Material;
use crate::ordinates::DiscreteOrdinateSet;

use super::grid::{Grid2D, ScalarField};
use super::iteration::{
    source_iteration, CaseConfig, IterationStats, SnSolution, SolverConfig, SourceTerm,
};

/// Conservative (area-weighted) average of a refined field onto `coarse`.
pub fn aggregate(fine: &ScalarField, coarse: &Grid2D) -> Result<ScalarField> {
    let g = fine.grid();
    let r = coarse.refinement_factor(g).ok_or_else(|| {
        Error::domain(format!(
            "{}x{} grid does not refine {}x{}",
            g.nx, g.ny, coarse.nx, coarse.ny
        ))
    })?;
    let mut out = vec![0.0; coarse.cells()];
    let scale = 1.0 / (r * r) as f64;
    for jc in 0..coarse.ny {
        for ic in 0..coarse.nx {
            let mut s = 0.0;
            for j in jc * r..(jc + 1) * r {
                let row = &fine.values()[j * g.nx + ic * r..j * g.nx + (ic + 1) * r];
                s += row.iter().sum::<f64>();
            }
            out[coarse.index(ic, jc)] = s * scale;
        }
    }
    ScalarField::new(*coarse, out)
}

/// Per-cell `|numerical − aggregated reference|`.
pub fn error_field(numerical: &ScalarField, reference: &ScalarField) -> Result<ScalarField> {
    let agg = aggregate(reference, numerical.grid())?;
    let diff = numerical
        .values()
        .iter()
        .zip(agg.values())
        .map(|(a, b)| (a - b).abs())
        .collect();
    ScalarField::new(*numerical.grid(), diff)
}

/// Mean absolute cell difference after aggregating the reference onto the numerical grid.
pub fn l1_error(numerical: &ScalarField, reference: &ScalarField) -> Result<f64> {
    let e = error_field(numerical, reference)?;
    Ok(e.values().iter().sum::<f64>() / e.values().len() as f64)
}

/// `ln(E_coarse / E_fine) / ln(refinement)`.
pub fn observed_rate(e_coarse: f64, e_fine: f64, refinement: f64) -> f64 {
    (e_coarse / e_fine).ln() / refinement.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub mesh: usize,
    pub l1_error: f64,
    /// Rate against the previous (coarser) row; absent on the first row.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn from_errors(meshes: &[usize], errors: &[f64]) -> Self {
        let rows = meshes
            .iter()
            .zip(errors)
            .enumerate()
            .map(|(k, (&mesh, &l1_error))| ConvergenceRow {
                mesh,
                l1_error,
                rate: (k > 0).then(|| {
                    observed_rate(errors[k - 1], l1_error, mesh as f64 / meshes[k - 1] as f64)
                }),
            })
            .collect();
        ConvergenceTable { rows }
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }

    pub fn errors_strictly_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].l1_error < w[0].l1_error)
    }
}

/// A constant-coefficient, uniform-source problem whose mesh is varied by the study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyCase {
    pub material: Material,
    pub source: f64,
    pub domain: RectDomain,
    pub sn_order: usize,
}

impl StudyCase {
    pub fn on_mesh(&self, n: usize) -> Result<CaseConfig> {
        Ok(CaseConfig::uniform(
            self.material,
            self.source,
            self.sn_order,
            Grid2D::over(&self.domain, n, n)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome {
    pub table: ConvergenceTable,
    pub solutions: Vec<SnSolution>,
    pub error_fields: Vec<ScalarField>,
    /// Present when the study solved its own reference.
    pub reference_stats: Option<IterationStats>,
}

fn check_doubling(meshes: &[usize]) -> Result<()> {
    if meshes.is_empty() || meshes[0] == 0 {
        return Err(Error::precondition(
            "mesh list must be nonempty and positive",
        ));
    }
    if meshes.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::precondition(format!(
            "meshes {meshes:?} do not form a doubling sequence"
        )));
    }
    Ok(())
}

/// Solves `case` on every mesh and on `reference_mesh`, then tabulates L1 errors and rates.
pub fn convergence_study(
    case: &StudyCase,
    meshes: &[usize],
    reference_mesh: usize,
    quad: &DiscreteOrdinateSet,
    cfg: &SolverConfig,
) -> Result<StudyOutcome> {
    check_doubling(meshes)?;
    check_reference(meshes, reference_mesh)?;
    let reference = source_iteration(&case.on_mesh(reference_mesh)?, quad, cfg)?;
    let mut out = convergence_study_with_reference(case, meshes, &reference.phi, quad, cfg)?;
    out.reference_stats = Some(reference.stats);
    Ok(out)
}

fn check_reference(meshes: &[usize], reference_mesh: usize) -> Result<()> {
    let finest = *meshes.last().expect("checked nonempty");
    if meshes.iter().any(|&n| reference_mesh % n != 0) || reference_mesh < 4 * finest {
        return Err(Error::precondition(format!(
            "reference mesh {reference_mesh} must be a multiple of every study mesh and at least 4x {finest}"
        )));
    }
    Ok(())
}

/// As [`convergence_study`] with a precomputed (for example cached) reference field.
pub fn convergence_study_with_reference(
    case: &StudyCase,
    meshes: &[usize],
    reference: &ScalarField,
    quad: &DiscreteOrdinateSet,
    cfg: &SolverConfig,
) -> Result<StudyOutcome> {
    check_doubling(meshes)?;
    let g = reference.grid();
    if g.nx != g.ny {
        return Err(Error::precondition("reference field must be square"));
    }
    check_reference(meshes, g.nx)?;
    let mut solutions = Vec::with_capacity(meshes.len());
    let mut error_fields = Vec::with_capacity(meshes.len());
    let mut errors = Vec::with_capacity(meshes.len());
    for &n in meshes {
        let sol = source_iteration(&case.on_mesh(n)?, quad, cfg)?;
        let e = error_field(&sol.phi, reference)?;
        errors.push(e.values().iter().sum::<f64>() / e.values().len() as f64);
        error_fields.push(e);
        solutions.push(sol);
    }
    Ok(StudyOutcome {
        table: ConvergenceTable::from_errors(meshes, &errors),
        solutions,
        error_fields,
        reference_stats: None,
    })
}

/// Isotropic manufactured angular flux `ψ = sin(πu) sin(πv)` on a rectangle, with
/// `u, v` the normalized coordinates. It vanishes on the whole boundary, so it is
/// compatible with vacuum inflow for every direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub domain: RectDomain,
}

impl ManufacturedSolution {
    /// Cell averages of `sin(πu)` along x and its derivative, for column `i`.
    fn x_factors(&self, grid: &Grid2D, i: usize) -> (f64, f64) {
        let w = self.domain.width();
        let a = (grid.origin.x1 + i as f64 * grid.hx - self.domain.lower().x1) / w;
        let b = a + grid.hx / w;
        let avg = w / (PI * grid.hx) * ((PI * a).cos() - (PI * b).cos());
        let davg = ((PI * b).sin() - (PI * a).sin()) / grid.hx;
        (avg, davg)
    }

    fn y_factors(&self, grid: &Grid2D, j: usize) -> (f64, f64) {
        let h = self.domain.height();
        let a = (grid.origin.x2 + j as f64 * grid.hy - self.domain.lower().x2) / h;
        let b = a + grid.hy / h;
        let avg = h / (PI * grid.hy) * ((PI * a).cos() - (PI * b).cos());
        let davg = ((PI * b).sin() - (PI * a).sin()) / grid.hy;
        (avg, davg)
    }

    /// Exact cell averages of the scalar flux (equal to `ψ` because `Σw = 1`).
    pub fn exact_field(&self, grid: &Grid2D) -> ScalarField {
        ScalarField::from_fn(*grid, |i, j| {
            self.x_factors(grid, i).0 * self.y_factors(grid, j).0
        })
    }

    /// Cell averages of `f_m = μ ∂xψ + η ∂yψ + (σ − σ_s) ψ` for every ordinate.
    pub fn sources(
        &self,
        grid: &Grid2D,
        material: &Material,
        quad: &DiscreteOrdinateSet,
    ) -> Vec<Vec<f64>> {
        let xs: Vec<_> = (0..grid.nx).map(|i| self.x_factors(grid, i)).collect();
        let ys: Vec<_> = (0..grid.ny).map(|j| self.y_factors(grid, j)).collect();
        let sa = material.sigma_a();
        quad.directions()
            .iter()
            .map(|d| {
                let mut f = Vec::with_capacity(grid.cells());
                for &(ay, dy) in &ys {
                    for &(ax, dx) in &xs {
                        f.push(d.mu * dx * ay + d.eta * ax * dy + sa * ax * ay);
                    }
                }
                f
            })
            .collect()
    }
}

/// Mesh study against the exact cell averages of [`ManufacturedSolution`].
pub fn manufactured_study(
    material: &Material,
    domain: &RectDomain,
    meshes: &[usize],
    quad: &DiscreteOrdinateSet,
    cfg: &SolverConfig,
) -> Result<StudyOutcome> {
    check_doubling(meshes)?;
    let plant = ManufacturedSolution { domain: *domain };
    let mut solutions = Vec::new();
    let mut error_fields = Vec::new();
    let mut errors = Vec::new();
    for &n in meshes {
        let grid = Grid2D::over(domain, n, n)?;
        let case = CaseConfig {
            material: *material,
            source: SourceTerm::Angular(plant.sources(&grid, material, quad)),
            sn_order: quad.order(),
            grid,
        };
        let sol = source_iteration(&case, quad, cfg)?;
        let exact = plant.exact_field(&grid);
        let e: Vec<f64> = sol
            .phi
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .collect();
        errors.push(e.iter().sum::<f64>() / e.len() as f64);
        error_fields.push(ScalarField::new(grid, e)?);
        solutions.push(sol);
    }
    Ok(StudyOutcome {
        table: ConvergenceTable::from_errors(meshes, &errors),
        solutions,
        error_fields,
        reference_stats: None,
    })
}
