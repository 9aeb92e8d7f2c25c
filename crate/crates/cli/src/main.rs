//! `radtrans` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver failure,
//! 3 acceptance-threshold violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radtrans::harness::{self, RunConfig};
use radtrans::Error;

#[derive(Parser)]
#[command(
    name = "radtrans",
    version,
    about = "2D radiation transfer verification laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh-convergence study of one case against a (cached) reference solution.
    Run(Common),
    /// Boundary derivative profiles of the integral-equation solution.
    Regularity {
        #[command(flatten)]
        common: Common,
        /// Integral-solver mesh.
        #[arg(long)]
        mesh: Option<usize>,
        /// `solution` or `constant`.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Compares the S_N and integral-equation solutions on one grid.
    Crosscheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mesh: Option<usize>,
        /// Relative L1 tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Writes a level-symmetric quadrature set as CSV (mu, eta, weight).
    QuadratureDump {
        #[arg(long, default_value_t = 12)]
        order: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deletes every cached reference solution.
    CacheClear {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// 1..4 or inline:sigma=<σ>,sigmas=<σ_s>[,source=<f>].
    #[arg(long)]
    case: Option<String>,
    /// Doubling range `a:b` or comma list.
    #[arg(long)]
    meshes: Option<String>,
    /// Reference mesh.
    #[arg(long = "ref")]
    reference: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    /// Source-iteration tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long)]
    threads: Option<usize>,
    /// Additional `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, Error> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    cfg.apply_env();
    Ok(cfg)
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = load_config(self.config.as_ref())?;
        let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| cfg.set(k, &v));
        set("case", self.case.clone())?;
        set("meshes", self.meshes.clone())?;
        set("reference_mesh", self.reference.map(|v| v.to_string()))?;
        set("sn_order", self.order.map(|v| v.to_string()))?;
        set("si_tol", self.tol.map(|v| v.to_string()))?;
        set(
            "output_dir",
            self.out.as_ref().map(|p| p.display().to_string()),
        )?;
        set(
            "cache_dir",
            self.cache.as_ref().map(|p| p.display().to_string()),
        )?;
        set("threads", self.threads.map(|v| v.to_string()))?;
        cfg.apply_overrides(self.overrides.iter().map(String::as_str))?;
        Ok(cfg)
    }
}

fn configure_threads(cfg: &RunConfig) {
    if cfg.threads > 1 {
        // Fails only if a pool already exists, in which case the existing one is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
}

enum Outcome {
    Ok,
    Violations(Vec<String>),
}

fn report_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn execute(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            configure_threads(&cfg);
            let report = harness::run_case(&cfg)?;
            report_warnings(&report.warnings);
            println!(
                "{} (sigma = {}, sigma_s = {}), reference {}",
                report.label,
                report.material.sigma_t,
                report.material.sigma_s,
                report.reference_mesh
            );
            println!("{:>6}  {:>12}  {:>6}", "mesh", "l1_error", "rate");
            for row in &report.table.rows {
                let rate = row.rate.map_or(String::new(), |r| format!("{r:.3}"));
                println!("{:>6}  {:>12.4e}  {:>6}", row.mesh, row.l1_error, rate);
            }
            println!("artifacts written to {}", cfg.output_dir.display());
            Ok(outcome(report.violations))
        }
        Command::Regularity { common, mesh, mode } => {
            let mut cfg = common.resolve()?;
            if let Some(m) = mesh {
                cfg.integral_mesh = m;
            }
            if let Some(m) = mode {
                cfg.set("regularity_mode", &m)?;
            }
            configure_threads(&cfg);
            let r = harness::run_regularity(&cfg)?;
            report_warnings(&r.notes);
            if let Some(f) = &r.first.fit {
                println!(
                    "first derivative: |phi'| ~ {:.4} + {:.4}|log rho|, R² = {:.5}",
                    f.intercept, f.slope, f.r_squared
                );
            }
            if let Some(f) = &r.first_weak_power_fit {
                println!(
                    "first derivative, best power fit in [-0.5, 0): exponent {:.4}, R² = {:.5}",
                    f.slope, f.r_squared
                );
            }
            if let Some(f) = &r.second.fit {
                println!(
                    "second derivative: exponent {:.4}, R² = {:.5}",
                    f.slope, f.r_squared
                );
            }
            println!(
                "weighted norm estimate {:.6e} (dense sampling {:.6e})",
                r.weighted_norm, r.weighted_norm_dense
            );
            Ok(outcome(r.violations))
        }
        Command::Crosscheck {
            common,
            mesh,
            tolerance,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(m) = mesh {
                cfg.crosscheck_mesh = m;
            }
            if let Some(t) = tolerance {
                cfg.crosscheck_tolerance = t;
            }
            configure_threads(&cfg);
            let r = harness::run_crosscheck(&cfg)?;
            println!(
                "{} on {}x{}: S_N mean {:.10e}, integral mean {:.10e}",
                r.label, r.mesh, r.mesh, r.sn_mean, r.integral_mean
            );
            println!(
                "relative L1 {:.4e}, relative Linf {:.4e} (tolerance {:.1e})",
                r.relative_l1, r.relative_linf, r.tolerance
            );
            Ok(outcome(r.violations))
        }
        Command::QuadratureDump { order, out } => {
            let set = harness::quadrature_dump(order, out.as_deref()).map_err(|e| match e {
                Error::Domain(m) => Error::Config(m),
                other => other,
            })?;
            if let Some(p) = out {
                eprintln!(
                    "S{} set with {} directions written to {}",
                    set.order(),
                    set.len(),
                    p.display()
                );
            }
            Ok(Outcome::Ok)
        }
        Command::CacheClear { config, cache } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(c) = cache {
                cfg.cache_dir = c;
            }
            let n = harness::cache_clear(&cfg.cache_dir)?;
            println!("removed {n} files from {}", cfg.cache_dir.display());
            Ok(Outcome::Ok)
        }
    }
}

fn outcome(violations: Vec<String>) -> Outcome {
    if violations.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Violations(violations)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Precondition(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violations(v)) => {
            for line in v {
                eprintln!("threshold violation: {line}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
