//! Case registry, configuration, reference caching and report emission.
//!
//! Every run writes its artifacts into `output_dir`, named after the case
//! label (`case1`, `inline_s1_ss0_f1`, ...). Reports and CSVs depend only on
//! the configuration, so repeated runs produce identical bytes; wall-clock
//! times and cache activity go to a separate `*_timings.json`.

mod cache;
mod config;
mod plot;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use cache::{sha256_hex, CacheKey, CacheLookup, ReferenceCache};
pub use config::{parse_meshes, CaseSpec, RegularityMode, RunConfig, CACHE_ENV, REGISTERED_CASES};

use crate::error::{Error, Result};
use crate::geometry::{Point2, RectDomain};
use crate::integral::{assemble_transfer_matrix, neumann_solve, pointwise_flux};
use crate::integrate::QuadratureSpec;
use crate::io;
use crate::kernel::Material;
use crate::ordinates::{level_symmetric, DiscreteOrdinateSet};
use crate::parallel::Execution;
use crate::regularity::{
    constrained_power_fit, derivative_profile, dyadic_rhos, regularity_fit, weighted_norm_estimate,
    BoundaryProfile, DerivativeOptions, Edge, FitModel, FitReport, Ray, RegularityParams,
};
use crate::sn::{
    convergence_study_with_reference, source_iteration, BalanceReport, CaseConfig,
    ConvergenceTable, Grid2D, IterationStats, ScalarField, SolverConfig, StudyCase,
};

/// Largest acceptable relative balance residual of a converged S_N run.
pub const BALANCE_TOLERANCE: f64 = 1e-8;

/// Smallest and largest dyadic exponent `k` of the regularity samples `ϱ = 2^{−k}·min(1, 1/σ)`.
pub const REGULARITY_K_RANGE: (u32, u32) = (3, 9);

impl RunConfig {
    pub fn execution(&self) -> Execution {
        if self.threads == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            si_tol: self.si_tol,
            max_iterations: self.max_iterations,
            execution: self.execution(),
        }
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(self.physics_fingerprint().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub quadrature_order: usize,
    pub quadrature_directions: usize,
    pub version: String,
}

impl Provenance {
    fn new(cfg: &RunConfig, quad: &DiscreteOrdinateSet) -> Self {
        Provenance {
            config_hash: cfg.config_hash(),
            quadrature_order: quad.order(),
            quadrature_directions: quad.len(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Solver statistics of one mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mesh: usize,
    pub iterations: usize,
    pub final_residual: f64,
    pub negative_flux_count: usize,
    pub unstable_directions: usize,
    pub balance: BalanceReport,
}

impl RunSummary {
    fn new(mesh: usize, stats: &IterationStats) -> Self {
        RunSummary {
            mesh,
            iterations: stats.iterations,
            final_residual: stats.final_residual,
            negative_flux_count: stats.negative_flux_count,
            unstable_directions: stats.unstable_directions,
            balance: stats.balance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub label: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub case: String,
    pub label: String,
    pub material: Material,
    pub source: f64,
    pub meshes: Vec<usize>,
    pub reference_mesh: usize,
    pub si_tol: f64,
    pub table: ConvergenceTable,
    pub runs: Vec<RunSummary>,
    pub reference: RunSummary,
    pub warnings: Vec<String>,
    /// Threshold violations (nonempty means the run should fail CI).
    pub violations: Vec<String>,
    pub provenance: Provenance,
    /// Wall-clock per run; written to `*_timings.json`, not to the report.
    #[serde(skip)]
    pub timings: Vec<RunTiming>,
    /// Cache activity; written to `*_timings.json`.
    #[serde(skip)]
    pub cache_events: Vec<String>,
}

fn create_out(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create_out(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn stability_warnings(
    sigma_t: f64,
    quad: &DiscreteOrdinateSet,
    run: &RunSummary,
    warnings: &mut Vec<String>,
) {
    if run.unstable_directions > 0 {
        warnings.push(format!(
            "mesh {}: {} of {} ordinates violate the DD stability condition h <= 2|mu|/sigma (h = {:e}, 2*mu_min/sigma = {:e})",
            run.mesh,
            run.unstable_directions,
            quad.len(),
            1.0 / run.mesh as f64,
            2.0 * quad.min_cosine() / sigma_t
        ));
    }
    if run.negative_flux_count > 0 {
        warnings.push(format!(
            "mesh {}: {} cells with negative angular flux in the final sweep",
            run.mesh, run.negative_flux_count
        ));
    }
}

fn balance_violation(run: &RunSummary, violations: &mut Vec<String>) {
    if !(run.balance.relative_residual <= BALANCE_TOLERANCE) {
        violations.push(format!(
            "mesh {}: balance residual {:e} exceeds {:e}",
            run.mesh, run.balance.relative_residual, BALANCE_TOLERANCE
        ));
    }
}

/// Obtains the reference field from the cache, or solves and stores it.
fn reference_solution(
    cfg: &RunConfig,
    study: &StudyCase,
    quad: &DiscreteOrdinateSet,
    events: &mut Vec<String>,
    warnings: &mut Vec<String>,
) -> Result<(ScalarField, RunSummary)> {
    let cache = ReferenceCache::new(&cfg.cache_dir);
    let key = CacheKey {
        material: study.material,
        source: study.source,
        mesh: cfg.reference_mesh,
        sn_order: cfg.sn_order,
        si_tol: cfg.si_tol,
    };
    match cache.load(&key) {
        CacheLookup::Hit { field, meta } => match serde_json::from_str::<RunSummary>(&meta) {
            Ok(summary) => {
                events.push(format!(
                    "reference {} loaded from cache {}",
                    cfg.reference_mesh,
                    key.digest()
                ));
                let grid = Grid2D::unit_square(cfg.reference_mesh)?;
                return Ok((ScalarField::new(grid, field.into_values())?, summary));
            }
            Err(e) => warnings.push(format!(
                "cache entry {} has unreadable metadata ({e}); recomputing",
                key.digest()
            )),
        },
        CacheLookup::Corrupt(reason) => {
            warnings.push(format!("cache entry rejected: {reason}; recomputing"))
        }
        CacheLookup::Miss => {}
    }
    let sol = source_iteration(&study.on_mesh(cfg.reference_mesh)?, quad, &cfg.solver())?;
    let summary = RunSummary::new(cfg.reference_mesh, &sol.stats);
    let meta = serde_json::to_string(&summary).map_err(|e| Error::Format(e.to_string()))?;
    cache.store(&key, &sol.phi, &meta)?;
    events.push(format!(
        "reference {} computed and cached as {}",
        cfg.reference_mesh,
        key.digest()
    ));
    Ok((sol.phi, summary))
}

/// Mesh-convergence study of the configured case; writes the table, error
/// maps, report, timings and a plotting script into `output_dir`.
pub fn run_case(cfg: &RunConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let quad = level_symmetric(cfg.sn_order)?;
    let material = cfg.case.material()?;
    let study = StudyCase {
        material,
        source: cfg.case.source(),
        domain: RectDomain::unit_square(),
        sn_order: cfg.sn_order,
    };
    let label = cfg.case.label();
    let (mut warnings, mut violations, mut events, mut timings) = (vec![], vec![], vec![], vec![]);

    let t = Instant::now();
    let (reference, reference_summary) =
        reference_solution(cfg, &study, &quad, &mut events, &mut warnings)?;
    timings.push(RunTiming {
        label: format!("reference {}", cfg.reference_mesh),
        seconds: t.elapsed().as_secs_f64(),
    });
    balance_violation(&reference_summary, &mut violations);

    let t = Instant::now();
    let outcome =
        convergence_study_with_reference(&study, &cfg.meshes, &reference, &quad, &cfg.solver())?;
    timings.push(RunTiming {
        label: "study meshes".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    let runs: Vec<RunSummary> = cfg
        .meshes
        .iter()
        .zip(&outcome.solutions)
        .map(|(&n, s)| RunSummary::new(n, &s.stats))
        .collect();
    for run in &runs {
        stability_warnings(material.sigma_t, &quad, run, &mut warnings);
        balance_violation(run, &mut violations);
    }

    let out = &cfg.output_dir;
    let mut w = create_out(out, &format!("{label}_table.csv"))?;
    io::write_table_csv(&mut w, &outcome.table)?;
    w.flush()?;
    for (&n, e) in cfg.meshes.iter().zip(&outcome.error_fields) {
        let mut w = create_out(out, &format!("{label}_error_{n}.csv"))?;
        io::write_error_field_csv(&mut w, e)?;
        w.flush()?;
    }
    fs::write(
        out.join(format!("{label}_plot.py")),
        plot::study_script(&label, &cfg.meshes),
    )?;

    let report = StudyReport {
        case: cfg.case.to_string(),
        label: label.clone(),
        material,
        source: study.source,
        meshes: cfg.meshes.clone(),
        reference_mesh: cfg.reference_mesh,
        si_tol: cfg.si_tol,
        table: outcome.table,
        runs,
        reference: reference_summary,
        warnings,
        violations,
        provenance: Provenance::new(cfg, &quad),
        timings,
        cache_events: events,
    };
    write_json(out, &format!("{label}_report.json"), &report)?;
    write_json(
        out,
        &format!("{label}_timings.json"),
        &serde_json::json!({ "timings": report.timings, "cache": report.cache_events }),
    )?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub order: usize,
    pub rho: Vec<f64>,
    pub values: Vec<f64>,
    /// Log model (first derivative) or power model (second derivative); absent for degenerate profiles.
    pub fit: Option<FitReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub case: String,
    pub label: String,
    pub mode: RegularityMode,
    pub integral_mesh: usize,
    pub neumann_iterations: usize,
    pub first: ProfileReport,
    pub second: ProfileReport,
    /// Free power-law fit of the first-derivative profile.
    pub first_power_fit: Option<FitReport>,
    /// Best power-law fit of the first derivative with exponent in `[−0.5, 0)`.
    pub first_weak_power_fit: Option<FitReport>,
    pub weighted_norm: f64,
    /// Same estimate with twice the sample density.
    pub weighted_norm_dense: f64,
    pub notes: Vec<String>,
    pub violations: Vec<String>,
    pub provenance: Provenance,
}

/// Dyadic boundary distances scaled to the mean free path of thick media.
pub fn regularity_rhos(sigma_t: f64, per_octave: u32) -> Vec<f64> {
    let scale = (1.0 / sigma_t).min(1.0);
    dyadic_rhos(REGULARITY_K_RANGE.0, REGULARITY_K_RANGE.1, per_octave)
        .into_iter()
        .map(|r| r * scale)
        .collect()
}

/// Normal-derivative profiles at the left edge midpoint of the Nyström
/// solution, with growth-model fits and the weighted-norm estimate.
pub fn run_regularity(cfg: &RunConfig) -> Result<RegularityReport> {
    cfg.case.material()?;
    let quad = level_symmetric(cfg.sn_order)?;
    let material = cfg.case.material()?;
    let exec = cfg.execution();
    let spec = QuadratureSpec::default();
    let grid = Grid2D::unit_square(cfg.integral_mesh)?;
    let domain = grid.domain();
    let f = ScalarField::constant(grid, cfg.case.source());
    let label = cfg.case.label();

    let (phi, iterations, evaluator): (
        ScalarField,
        usize,
        Box<dyn Fn(&Point2) -> Result<f64> + '_>,
    ) = match cfg.regularity_mode {
        RegularityMode::Constant => {
            let c = cfg.case.source();
            (
                ScalarField::constant(grid, c),
                0,
                Box::new(move |_: &Point2| Ok(c)),
            )
        }
        RegularityMode::Solution => {
            let tm = assemble_transfer_matrix(&grid, &material, &spec, exec)?;
            let sol = neumann_solve(&tm, &material, &f, cfg.neumann_tol, exec)?;
            let phi = sol.phi.clone();
            let f = f.clone();
            (
                phi,
                sol.iterations,
                Box::new(move |x: &Point2| {
                    pointwise_flux(&tm, &material, &sol.phi, &f, x, &spec, exec)
                }),
            )
        }
    };

    let ray = Ray::edge_midpoint(&domain, Edge::Left);
    let opts = DerivativeOptions::default();
    let profile = |order: usize, per_octave: u32| {
        derivative_profile(
            &evaluator,
            &domain,
            &ray,
            order,
            &regularity_rhos(material.sigma_t, per_octave),
            &opts,
        )
    };
    let (p1, p2) = (profile(1, 1)?, profile(2, 1)?);
    let (d1, d2) = (profile(1, 2)?, profile(2, 2)?);

    let mut notes = Vec::new();
    let mut fit = |p: &BoundaryProfile, model: FitModel, what: &str| match regularity_fit(p, model)
    {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    };
    let log1 = fit(&p1, FitModel::Log, "first derivative, log model");
    let pow1 = fit(&p1, FitModel::Power, "first derivative, power model");
    let pow2 = fit(&p2, FitModel::Power, "second derivative, power model");
    let weak1 = constrained_power_fit(&p1, -0.5, 0.0).ok();

    let params = RegularityParams::radiation(2);
    let weighted_norm = weighted_norm_estimate(&phi, &[p1.clone(), p2.clone()], &params)?;
    let weighted_norm_dense = weighted_norm_estimate(&phi, &[d1, d2], &params)?;

    let mut violations = Vec::new();
    match cfg.regularity_mode {
        RegularityMode::Solution => {
            match (&log1, &weak1) {
                (Some(l), Some(w)) => {
                    if l.r_squared < 0.9 {
                        violations.push(format!(
                            "first-derivative log-model R² {:.4} < 0.9",
                            l.r_squared
                        ));
                    }
                    if l.r_squared <= w.r_squared {
                        violations.push(format!(
                            "log model R² {:.4} does not beat the weak power fit R² {:.4}",
                            l.r_squared, w.r_squared
                        ));
                    }
                }
                _ => violations.push("first-derivative fits unavailable".into()),
            }
            match &pow2 {
                Some(p) if (p.slope + 1.0).abs() <= 0.2 => {}
                Some(p) => violations.push(format!(
                    "second-derivative exponent {:.4} outside -1 ± 0.2",
                    p.slope
                )),
                None => violations.push("second-derivative fit unavailable".into()),
            }
        }
        RegularityMode::Constant => {
            if p1
                .samples()
                .iter()
                .chain(p2.samples())
                .any(|s| s.value != 0.0)
            {
                violations.push("constant field produced nonzero derivative estimates".into());
            }
        }
    }

    let out = &cfg.output_dir;
    let zeros = vec![0.0; p1.len()];
    let mut w = create_out(out, &format!("{label}_regularity_d1.csv"))?;
    io::write_profile_csv(&mut w, &p1, log1.as_ref().map_or(&zeros, |f| &f.fitted))?;
    w.flush()?;
    let mut w = create_out(out, &format!("{label}_regularity_d2.csv"))?;
    io::write_profile_csv(&mut w, &p2, pow2.as_ref().map_or(&zeros, |f| &f.fitted))?;
    w.flush()?;
    fs::write(
        out.join(format!("{label}_regularity_plot.py")),
        plot::regularity_script(&label),
    )?;

    let as_report = |order: usize, p: &BoundaryProfile, fit: Option<FitReport>| ProfileReport {
        order,
        rho: p.samples().iter().map(|s| s.rho).collect(),
        values: p.samples().iter().map(|s| s.value).collect(),
        fit,
    };
    let report = RegularityReport {
        case: cfg.case.to_string(),
        label: label.clone(),
        mode: cfg.regularity_mode,
        integral_mesh: cfg.integral_mesh,
        neumann_iterations: iterations,
        first: as_report(1, &p1, log1),
        second: as_report(2, &p2, pow2),
        first_power_fit: pow1,
        first_weak_power_fit: weak1,
        weighted_norm,
        weighted_norm_dense,
        notes,
        violations,
        provenance: Provenance::new(cfg, &quad),
    };
    write_json(out, &format!("{label}_regularity.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub case: String,
    pub label: String,
    pub mesh: usize,
    pub sn_order: usize,
    pub relative_l1: f64,
    pub relative_linf: f64,
    pub tolerance: f64,
    pub flagged: bool,
    pub sn_mean: f64,
    pub integral_mean: f64,
    pub sn_iterations: usize,
    pub neumann_iterations: usize,
    pub violations: Vec<String>,
    pub provenance: Provenance,
}

/// Compares the S_N and Nyström–Neumann solutions on the same grid.
pub fn run_crosscheck(cfg: &RunConfig) -> Result<CrosscheckReport> {
    let material = cfg.case.material()?;
    let quad = level_symmetric(cfg.sn_order)?;
    let exec = cfg.execution();
    let n = cfg.crosscheck_mesh;
    let grid = Grid2D::unit_square(n)?;
    let label = cfg.case.label();

    let sn = source_iteration(
        &CaseConfig::uniform(material, cfg.case.source(), cfg.sn_order, grid),
        &quad,
        &cfg.solver(),
    )?;
    let tm = assemble_transfer_matrix(&grid, &material, &QuadratureSpec::default(), exec)?;
    let nys = neumann_solve(
        &tm,
        &material,
        &ScalarField::constant(grid, cfg.case.source()),
        cfg.neumann_tol,
        exec,
    )?;

    let (a, b) = (sn.phi.values(), nys.phi.values());
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    let l1_ref: f64 = b.iter().map(|v| v.abs()).sum();
    let relative_l1 = diff.iter().sum::<f64>() / l1_ref;
    let relative_linf = diff.iter().copied().fold(0.0, f64::max) / nys.phi.max_abs();
    let flagged = !(relative_l1 <= cfg.crosscheck_tolerance);

    let out = &cfg.output_dir;
    let mut w = create_out(out, &format!("{label}_crosscheck_{n}.csv"))?;
    io::write_error_field_csv(&mut w, &ScalarField::new(grid, diff)?)?;
    w.flush()?;

    let cells = grid.cells() as f64;
    let report = CrosscheckReport {
        case: cfg.case.to_string(),
        label: label.clone(),
        mesh: n,
        sn_order: cfg.sn_order,
        relative_l1,
        relative_linf,
        tolerance: cfg.crosscheck_tolerance,
        flagged,
        sn_mean: a.iter().sum::<f64>() / cells,
        integral_mean: b.iter().sum::<f64>() / cells,
        sn_iterations: sn.stats.iterations,
        neumann_iterations: nys.iterations,
        violations: if flagged {
            vec![format!(
                "relative L1 difference {relative_l1:e} exceeds {:e}",
                cfg.crosscheck_tolerance
            )]
        } else {
            vec![]
        },
        provenance: Provenance::new(cfg, &quad),
    };
    write_json(out, &format!("{label}_crosscheck.json"), &report)?;
    Ok(report)
}

/// Writes the quadrature set as CSV to `path`, or to stdout when `path` is `None`.
pub fn quadrature_dump(order: usize, path: Option<&Path>) -> Result<DiscreteOrdinateSet> {
    let set = level_symmetric(order)?;
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut w = BufWriter::new(File::create(p)?);
            io::write_quadrature_csv(&mut w, &set)?;
            w.flush()?;
        }
        None => io::write_quadrature_csv(std::io::stdout().lock(), &set)?,
    }
    Ok(set)
}

/// Empties the reference cache directory.
pub fn cache_clear(dir: impl Into<PathBuf>) -> Result<usize> {
    ReferenceCache::new(dir).clear()
}
