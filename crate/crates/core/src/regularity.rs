//! Boundary regularity diagnostics for a solved flux.
//!
//! Near the boundary the scalar flux of the 2D problem behaves like
//! `|Dφ| ~ 1 + |log ϱ|` and `|D²φ| ~ ϱ^{−1}`, with `ϱ` the distance to the
//! boundary. This module samples normal derivatives along an inward ray,
//! fits both growth models, and evaluates the discrete weighted norm
//! `Σ_{α≤m} sup w_{α−(n−ν)}(x) |D^α φ(x)|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, RectDomain};
use crate::sn::ScalarField;

/// Distance from `x` to the boundary of `domain`.
pub fn boundary_distance(domain: &RectDomain, x: &Point2) -> Result<f64> {
    if !domain.contains(x) {
        return Err(Error::domain(format!("point {x:?} is outside the domain")));
    }
    let (lo, hi) = (domain.lower(), domain.upper());
    Ok((x.x1 - lo.x1)
        .min(hi.x1 - x.x1)
        .min(x.x2 - lo.x2)
        .min(hi.x2 - x.x2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

/// Ray from a boundary point along the unit inward direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Point2,
    pub direction: (f64, f64),
}

impl Ray {
    /// Inward normal through the midpoint of `edge`.
    pub fn edge_midpoint(domain: &RectDomain, edge: Edge) -> Ray {
        let (lo, hi, c) = (domain.lower(), domain.upper(), domain.center());
        match edge {
            Edge::Left => Ray {
                origin: Point2::new(lo.x1, c.x2),
                direction: (1.0, 0.0),
            },
            Edge::Right => Ray {
                origin: Point2::new(hi.x1, c.x2),
                direction: (-1.0, 0.0),
            },
            Edge::Bottom => Ray {
                origin: Point2::new(c.x1, lo.x2),
                direction: (0.0, 1.0),
            },
            Edge::Top => Ray {
                origin: Point2::new(c.x1, hi.x2),
                direction: (0.0, -1.0),
            },
        }
    }

    pub fn at(&self, t: f64) -> Point2 {
        self.origin
            .offset(t * self.direction.0, t * self.direction.1)
    }
}

/// Dyadic distances `2^{−k}` for `k` from `k_lo` to `k_hi` with `per_octave` samples per halving,
/// listed toward the boundary.
pub fn dyadic_rhos(k_lo: u32, k_hi: u32, per_octave: u32) -> Vec<f64> {
    let steps = (k_hi - k_lo) * per_octave.max(1);
    (0..=steps)
        .map(|s| 2f64.powf(-(k_lo as f64 + s as f64 / per_octave.max(1) as f64)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub rho: f64,
    pub value: f64,
}

/// Samples `(ϱ, value)` along a ray, with `ϱ` strictly decreasing toward 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProfile {
    samples: Vec<ProfileSample>,
}

impl BoundaryProfile {
    pub fn new(samples: Vec<ProfileSample>) -> Result<Self> {
        if samples
            .iter()
            .any(|s| !(s.rho > 0.0 && s.rho.is_finite() && s.value.is_finite()))
        {
            return Err(Error::domain(
                "profile samples need positive distances and finite values",
            ));
        }
        if samples.windows(2).any(|w| w[1].rho >= w[0].rho) {
            return Err(Error::domain("profile distances must decrease strictly"));
        }
        Ok(BoundaryProfile { samples })
    }

    pub fn from_fn(rhos: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        BoundaryProfile::new(
            rhos.iter()
                .map(|&rho| ProfileSample { rho, value: f(rho) })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Largest finite-difference step allowed, relative to `ϱ`.
pub const MAX_STEP_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeOptions {
    /// Base step as a fraction of `ϱ`.
    pub step_ratio: f64,
    /// Richardson extrapolation levels on top of the plain central difference.
    pub richardson_levels: usize,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        DerivativeOptions {
            step_ratio: MAX_STEP_RATIO,
            richardson_levels: 2,
        }
    }
}

fn central_difference<F: Fn(f64) -> Result<f64>>(
    g: &F,
    t: f64,
    h: f64,
    order: usize,
) -> Result<f64> {
    match order {
        1 => Ok((g(t + h)? - g(t - h)?) / (2.0 * h)),
        _ => Ok((g(t + h)? - 2.0 * g(t)? + g(t - h)?) / (h * h)),
    }
}

/// `k`-th derivative of `evaluator` along `ray` at each distance in `rhos`.
///
/// Each estimate is a central difference with step `step_ratio · ϱ`,
/// refined by Richardson extrapolation over successive step halvings.
pub fn derivative_profile<F>(
    evaluator: F,
    domain: &RectDomain,
    ray: &Ray,
    order: usize,
    rhos: &[f64],
    options: &DerivativeOptions,
) -> Result<BoundaryProfile>
where
    F: Fn(&Point2) -> Result<f64>,
{
    if order != 1 && order != 2 {
        return Err(Error::domain(format!(
            "derivative order must be 1 or 2, got {order}"
        )));
    }
    if !(options.step_ratio > 0.0 && options.step_ratio <= MAX_STEP_RATIO) {
        return Err(Error::precondition(format!(
            "step ratio {} must lie in (0, {MAX_STEP_RATIO}]",
            options.step_ratio
        )));
    }
    let g = |t: f64| evaluator(&ray.at(t));
    let mut samples = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let h = options.step_ratio * rho;
        for p in [ray.at(rho - h), ray.at(rho + h)] {
            if !domain.contains_strictly(&p) {
                return Err(Error::precondition(format!(
                    "stencil point {p:?} for ϱ = {rho} leaves the domain"
                )));
            }
        }
        // Tableau of central differences at h, h/2, h/4, ... (error series in h²).
        let mut table: Vec<f64> = (0..=options.richardson_levels)
            .map(|l| central_difference(&g, rho, h / f64::powi(2.0, l as i32), order))
            .collect::<Result<_>>()?;
        for level in 1..=options.richardson_levels {
            let factor = f64::powi(4.0, level as i32);
            for k in (level..table.len()).rev() {
                table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
            }
        }
        samples.push(ProfileSample {
            rho,
            value: *table.last().expect("nonempty"),
        });
    }
    BoundaryProfile::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitModel {
    /// `|v| ≈ a + b |log ϱ|`.
    Log,
    /// `log |v| ≈ c + p log ϱ`.
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: FitModel,
    /// Intercept: `a` for the log model, `c` for the power model.
    pub intercept: f64,
    /// Slope: `b` for the log model, the exponent `p` for the power model.
    pub slope: f64,
    /// Coefficient of determination in the model's own fitting variables.
    pub r_squared: f64,
    /// Model prediction of `|v|` at each sample.
    pub fitted: Vec<f64>,
}

pub const MIN_FIT_SAMPLES: usize = 5;

fn fit_variables(profile: &BoundaryProfile, model: FitModel) -> Result<(Vec<f64>, Vec<f64>)> {
    if profile.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "need at least {MIN_FIT_SAMPLES} samples, got {}",
            profile.len()
        )));
    }
    let s = profile.samples();
    let v0 = s[0].value.abs();
    if s.iter().all(|p| p.value.abs() == v0) {
        return Err(Error::Fit("degenerate profile: all values equal".into()));
    }
    match model {
        FitModel::Log => Ok((
            s.iter().map(|p| p.rho.ln().abs()).collect(),
            s.iter().map(|p| p.value.abs()).collect(),
        )),
        FitModel::Power => {
            if s.iter().any(|p| p.value == 0.0) {
                return Err(Error::Fit("power model needs nonzero values".into()));
            }
            Ok((
                s.iter().map(|p| p.rho.ln()).collect(),
                s.iter().map(|p| p.value.abs().ln()).collect(),
            ))
        }
    }
}

fn r_squared(x: &[f64], y: &[f64], intercept: f64, slope: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

fn report(
    profile: &BoundaryProfile,
    model: FitModel,
    x: &[f64],
    y: &[f64],
    intercept: f64,
    slope: f64,
) -> FitReport {
    let fitted = match model {
        FitModel::Log => x.iter().map(|a| intercept + slope * a).collect(),
        FitModel::Power => profile
            .samples()
            .iter()
            .map(|s| (intercept + slope * s.rho.ln()).exp())
            .collect(),
    };
    FitReport {
        model,
        intercept,
        slope,
        r_squared: r_squared(x, y, intercept, slope),
        fitted,
    }
}

/// Ordinary least-squares fit of `model` to the profile.
pub fn regularity_fit(profile: &BoundaryProfile, model: FitModel) -> Result<FitReport> {
    let (x, y) = fit_variables(profile, model)?;
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate profile: all distances equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(report(profile, model, &x, &y, my - slope * mx, slope))
}

/// Power-model fit with the exponent restricted to `[lo, hi)`, choosing the exponent of highest R².
pub fn constrained_power_fit(profile: &BoundaryProfile, lo: f64, hi: f64) -> Result<FitReport> {
    if !(lo < hi) {
        return Err(Error::Fit(format!("empty exponent range [{lo}, {hi})")));
    }
    let (x, y) = fit_variables(profile, FitModel::Power)?;
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    // R² is concave in the exponent, so the constrained optimum is the clamped free optimum.
    let p_free = sxy / sxx;
    let hi_inside = hi - 1e-12 * (hi - lo);
    let p = p_free.clamp(lo, hi_inside);
    Ok(report(profile, FitModel::Power, &x, &y, my - p * mx, p))
}

/// Exponents of a weighted space `C^{m,ν}` in `n` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    pub m: usize,
    pub nu: f64,
    pub n: usize,
}

impl RegularityParams {
    pub fn new(m: usize, nu: f64, n: usize) -> Result<Self> {
        if !(nu.is_finite() && nu < n as f64) {
            return Err(Error::domain(format!("need ν < n, got ν = {nu}, n = {n}")));
        }
        Ok(RegularityParams { m, nu, n })
    }

    /// The radiation kernel's exponents: `ν = 1` in two dimensions.
    pub fn radiation(m: usize) -> Self {
        RegularityParams { m, nu: 1.0, n: 2 }
    }
}

/// Weight `w_λ(ϱ)`: `1` for `λ < 0`, `(1 + |log ϱ|)^{−1}` for `λ = 0`, `ϱ^λ` for `λ > 0`.
pub fn weight(lambda: f64, rho: f64) -> f64 {
    if lambda < 0.0 {
        1.0
    } else if lambda == 0.0 {
        1.0 / (1.0 + rho.ln().abs())
    } else {
        rho.powf(lambda)
    }
}

/// `sup |φ| + Σ_{1≤α≤m} sup_samples w_{α−(n−ν)}(ϱ) |D^α φ|`, where `profiles[α−1]` holds
/// the samples of the `α`-th derivative.
pub fn weighted_norm_estimate(
    field: &ScalarField,
    profiles: &[BoundaryProfile],
    params: &RegularityParams,
) -> Result<f64> {
    let params = RegularityParams::new(params.m, params.nu, params.n)?;
    if profiles.len() < params.m {
        return Err(Error::precondition(format!(
            "need derivative profiles up to order {}, got {}",
            params.m,
            profiles.len()
        )));
    }
    let gap = params.n as f64 - params.nu;
    let mut total = field.max_abs() * weight(-gap, 1.0);
    for (k, profile) in profiles.iter().take(params.m).enumerate() {
        let lambda = (k + 1) as f64 - gap;
        total += profile
            .samples()
            .iter()
            .map(|s| weight(lambda, s.rho) * s.value.abs())
            .fold(0.0, f64::max);
    }
    Ok(total)
}
