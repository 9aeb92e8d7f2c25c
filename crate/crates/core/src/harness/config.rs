//! Run configuration: a flat `key = value` text file plus command-line overrides.
//!
//! ```text
//! # radtrans run configuration
//! case = 1                      # 1..4, or inline:sigma=<σ>,sigmas=<σ_s>[,source=<f>]
//! meshes = 10,20,40,80,160      # or a doubling range such as 10:160
//! reference_mesh = 1280
//! sn_order = 12
//! si_tol = 1e-10
//! max_iterations = 10000
//! neumann_tol = 1e-12
//! integral_mesh = 160           # regularity runs
//! crosscheck_mesh = 40
//! crosscheck_tolerance = 2e-2
//! regularity_mode = solution    # or constant
//! output_dir = out
//! cache_dir = .radtrans-cache
//! threads = 0                   # 0 = all cores, 1 = sequential
//! ```
//!
//! Blank lines and `#` comments are ignored; unknown keys are errors.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Material;

/// Environment variable overriding `cache_dir`.
pub const CACHE_ENV: &str = "RADTRANS_CACHE";

/// The four registered `(σ, σ_s)` pairs, all with `f = 1` on the unit square.
pub const REGISTERED_CASES: [(f64, f64); 4] = [(1.0, 0.0), (1.0, 0.8), (10.0, 0.0), (10.0, 9.0)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CaseSpec {
    Registered(u8),
    Inline {
        sigma_t: f64,
        sigma_s: f64,
        source: f64,
    },
}

impl CaseSpec {
    pub fn material(&self) -> Result<Material> {
        let (s, ss) = match *self {
            CaseSpec::Registered(k) => REGISTERED_CASES[k as usize - 1],
            CaseSpec::Inline {
                sigma_t, sigma_s, ..
            } => (sigma_t, sigma_s),
        };
        Material::new(s, ss).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn source(&self) -> f64 {
        match *self {
            CaseSpec::Registered(_) => 1.0,
            CaseSpec::Inline { source, .. } => source,
        }
    }

    /// File-name friendly label: `case1`, or `inline_s1_ss0_f1`.
    pub fn label(&self) -> String {
        match *self {
            CaseSpec::Registered(k) => format!("case{k}"),
            CaseSpec::Inline {
                sigma_t,
                sigma_s,
                source,
            } => format!("inline_s{sigma_t}_ss{sigma_s}_f{source}"),
        }
    }
}

impl fmt::Display for CaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseSpec::Registered(k) => write!(f, "{k}"),
            CaseSpec::Inline {
                sigma_t,
                sigma_s,
                source,
            } => {
                write!(f, "inline:sigma={sigma_t},sigmas={sigma_s}")?;
                if *source != 1.0 {
                    write!(f, ",source={source}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for CaseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_prefix("inline:") {
            let (mut sigma_t, mut sigma_s, mut source) = (None, None, 1.0);
            for part in body.split(',').filter(|p| !p.trim().is_empty()) {
                let (k, v) = part.split_once('=').ok_or_else(|| {
                    Error::Config(format!("inline case entry '{part}' is not key=value"))
                })?;
                let v = parse_f64(k, v)?;
                match k.trim() {
                    "sigma" | "sigma_t" => sigma_t = Some(v),
                    "sigmas" | "sigma_s" => sigma_s = Some(v),
                    "source" | "f" => source = v,
                    other => {
                        return Err(Error::Config(format!("unknown inline case key '{other}'")))
                    }
                }
            }
            let spec = CaseSpec::Inline {
                sigma_t: sigma_t.ok_or_else(|| Error::Config("inline case needs sigma=".into()))?,
                sigma_s: sigma_s.unwrap_or(0.0),
                source,
            };
            spec.material()?;
            if !(source.is_finite() && source >= 0.0) {
                return Err(Error::Config(format!(
                    "inline source must be nonnegative, got {source}"
                )));
            }
            return Ok(spec);
        }
        let k: u8 = s.strip_prefix("case").unwrap_or(s).parse().map_err(|_| {
            Error::Config(format!(
                "unknown case '{s}'; use 1..4 or inline:sigma=..,sigmas=.."
            ))
        })?;
        if !(1..=4).contains(&k) {
            return Err(Error::Config(format!("registered cases are 1..4, got {k}")));
        }
        Ok(CaseSpec::Registered(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityMode {
    /// Profiles of the solved flux.
    Solution,
    /// Synthetic constant field; every derivative profile is zero.
    Constant,
}

impl fmt::Display for RegularityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegularityMode::Solution => "solution",
            RegularityMode::Constant => "constant",
        })
    }
}

impl FromStr for RegularityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "solution" => Ok(RegularityMode::Solution),
            "constant" => Ok(RegularityMode::Constant),
            other => Err(Error::Config(format!(
                "regularity_mode must be solution or constant, got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub case: CaseSpec,
    pub meshes: Vec<usize>,
    pub reference_mesh: usize,
    pub sn_order: usize,
    pub si_tol: f64,
    pub max_iterations: usize,
    pub neumann_tol: f64,
    pub integral_mesh: usize,
    pub crosscheck_mesh: usize,
    pub crosscheck_tolerance: f64,
    pub regularity_mode: RegularityMode,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    /// `0` uses every core, `1` runs sequentially.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: CaseSpec::Registered(1),
            meshes: vec![10, 20, 40, 80, 160],
            reference_mesh: 1280,
            sn_order: 12,
            si_tol: 1e-10,
            max_iterations: 10_000,
            neumann_tol: 1e-12,
            integral_mesh: 160,
            crosscheck_mesh: 40,
            crosscheck_tolerance: 0.02,
            regularity_mode: RegularityMode::Solution,
            output_dir: PathBuf::from("out"),
            cache_dir: PathBuf::from(".radtrans-cache"),
            threads: 0,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{}: '{}' is not a number", key.trim(), v.trim())))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim().parse().map_err(|_| {
        Error::Config(format!(
            "{key}: '{}' is not a nonnegative integer",
            v.trim()
        ))
    })
}

/// Parses `a:b` (doubling from `a` up to `b`) or a comma-separated list.
pub fn parse_meshes(v: &str) -> Result<Vec<usize>> {
    let v = v.trim();
    if let Some((a, b)) = v.split_once(':') {
        let (a, b) = (parse_usize("meshes", a)?, parse_usize("meshes", b)?);
        if a == 0 || b < a {
            return Err(Error::Config(format!("invalid mesh range {v}")));
        }
        let mut out = vec![a];
        while *out.last().expect("nonempty") < b {
            out.push(2 * out.last().expect("nonempty"));
        }
        if *out.last().expect("nonempty") != b {
            return Err(Error::Config(format!(
                "{b} is not reached from {a} by doubling"
            )));
        }
        return Ok(out);
    }
    v.split(',').map(|p| parse_usize("meshes", p)).collect()
}

impl RunConfig {
    pub const KEYS: [&'static str; 14] = [
        "case",
        "meshes",
        "reference_mesh",
        "sn_order",
        "si_tol",
        "max_iterations",
        "neumann_tol",
        "integral_mesh",
        "crosscheck_mesh",
        "crosscheck_tolerance",
        "regularity_mode",
        "output_dir",
        "cache_dir",
        "threads",
    ];

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "case" => self.case = value.parse()?,
            "meshes" => self.meshes = parse_meshes(value)?,
            "reference_mesh" | "ref" => self.reference_mesh = parse_usize(key, value)?,
            "sn_order" | "order" => self.sn_order = parse_usize(key, value)?,
            "si_tol" | "tol" => self.si_tol = parse_f64(key, value)?,
            "max_iterations" => self.max_iterations = parse_usize(key, value)?,
            "neumann_tol" => self.neumann_tol = parse_f64(key, value)?,
            "integral_mesh" => self.integral_mesh = parse_usize(key, value)?,
            "crosscheck_mesh" => self.crosscheck_mesh = parse_usize(key, value)?,
            "crosscheck_tolerance" => self.crosscheck_tolerance = parse_f64(key, value)?,
            "regularity_mode" => self.regularity_mode = value.parse()?,
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "cache_dir" => self.cache_dir = PathBuf::from(value.trim()),
            "threads" => self.threads = parse_usize(key, value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key=value` override strings in order.
    pub fn apply_overrides<'a>(
        &mut self,
        overrides: impl IntoIterator<Item = &'a str>,
    ) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Points `cache_dir` at the [`CACHE_ENV`] directory when that variable is set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(CACHE_ENV).filter(|d| !d.is_empty()) {
            self.cache_dir = PathBuf::from(dir);
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn emit(&self) -> String {
        let meshes: Vec<String> = self.meshes.iter().map(|m| m.to_string()).collect();
        let mut s = String::from("# radtrans run configuration\n");
        for (k, v) in [
            ("case", self.case.to_string()),
            ("meshes", meshes.join(",")),
            ("reference_mesh", self.reference_mesh.to_string()),
            ("sn_order", self.sn_order.to_string()),
            ("si_tol", format!("{:e}", self.si_tol)),
            ("max_iterations", self.max_iterations.to_string()),
            ("neumann_tol", format!("{:e}", self.neumann_tol)),
            ("integral_mesh", self.integral_mesh.to_string()),
            ("crosscheck_mesh", self.crosscheck_mesh.to_string()),
            (
                "crosscheck_tolerance",
                format!("{:e}", self.crosscheck_tolerance),
            ),
            ("regularity_mode", self.regularity_mode.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("cache_dir", self.cache_dir.display().to_string()),
            ("threads", self.threads.to_string()),
        ] {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Emission of the keys that influence numerical results (no paths or thread counts).
    pub fn physics_fingerprint(&self) -> String {
        self.emit()
            .lines()
            .filter(|l| {
                !(l.starts_with('#')
                    || l.starts_with("output_dir")
                    || l.starts_with("cache_dir")
                    || l.starts_with("threads"))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Checks the study-related invariants.
    pub fn validate(&self) -> Result<()> {
        self.case.material()?;
        if self.meshes.is_empty() || self.meshes[0] == 0 {
            return Err(Error::Config(
                "need at least one positive study mesh".into(),
            ));
        }
        if self.meshes.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(Error::Config(format!(
                "meshes {:?} do not form a doubling chain",
                self.meshes
            )));
        }
        let finest = *self.meshes.last().expect("nonempty");
        if self.meshes.iter().any(|&m| self.reference_mesh % m != 0) {
            return Err(Error::Config(format!(
                "reference mesh {} is not divisible by every study mesh",
                self.reference_mesh
            )));
        }
        if self.reference_mesh < 4 * finest {
            return Err(Error::Config(format!(
                "reference mesh {} must be at least 4x the finest study mesh {finest}",
                self.reference_mesh
            )));
        }
        if crate::ordinates::level_symmetric(self.sn_order).is_err() {
            return Err(Error::Config(format!(
                "unsupported sn_order {}",
                self.sn_order
            )));
        }
        for (k, v) in [
            ("si_tol", self.si_tol),
            ("neumann_tol", self.neumann_tol),
            ("crosscheck_tolerance", self.crosscheck_tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        if self.max_iterations == 0 || self.integral_mesh == 0 || self.crosscheck_mesh == 0 {
            return Err(Error::Config(
                "iteration limits and meshes must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.emit()).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn case_parsing() {
        assert_eq!("3".parse::<CaseSpec>().unwrap(), CaseSpec::Registered(3));
        assert_eq!(
            "case2".parse::<CaseSpec>().unwrap(),
            CaseSpec::Registered(2)
        );
        assert_eq!(
            "inline:sigma=1,sigmas=0".parse::<CaseSpec>().unwrap(),
            CaseSpec::Inline {
                sigma_t: 1.0,
                sigma_s: 0.0,
                source: 1.0
            }
        );
        assert!("5".parse::<CaseSpec>().is_err());
        assert!("inline:sigma=1,sigmas=2".parse::<CaseSpec>().is_err());
        assert!("inline:sigmas=0.5".parse::<CaseSpec>().is_err());
        assert!("inline:sigma=1,foo=2".parse::<CaseSpec>().is_err());
    }

    #[test]
    fn mesh_ranges() {
        assert_eq!(parse_meshes("10:160").unwrap(), vec![10, 20, 40, 80, 160]);
        assert_eq!(parse_meshes("10:10").unwrap(), vec![10]);
        assert_eq!(parse_meshes("5,10").unwrap(), vec![5, 10]);
        assert!(parse_meshes("10:150").is_err());
    }

    #[test]
    fn validation_rejects_bad_chains() {
        let mut c = RunConfig::default();
        c.meshes = vec![10, 30];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.reference_mesh = 320;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.reference_mesh = 1300;
        assert!(c.validate().is_err());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let e = RunConfig::parse("case = 1\nbogus = 2\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(RunConfig::parse("meshes 10").is_err());
    }

    #[test]
    fn overrides_apply_in_order() {
        let mut c = RunConfig::default();
        c.apply_overrides(["ref=640", "meshes=10:40", "case=inline:sigma=2,sigmas=1"])
            .unwrap();
        assert_eq!(c.reference_mesh, 640);
        assert_eq!(c.meshes, vec![10, 20, 40]);
        assert_eq!(c.case.material().unwrap(), Material::new(2.0, 1.0).unwrap());
    }
}
