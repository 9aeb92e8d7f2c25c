//! The 2D radiation kernel
//!
//! ```text
//! K(x, y) = σ_s / (2πρ) · Ki1(σρ),   ρ = |x − y|
//! ```
//!
//! obtained by integrating the 3D point kernel `σ_s e^{−σ|x−y|}/(4π|x−y|²)`
//! along the third coordinate. It is weakly singular: `K ≤ σ_s/(4ρ)` for all
//! `ρ`, and `K > 0.3 σ_s/(2πρ)` while `σρ < 1`.
//!
//! Most routines work with the scattering-free factor `T = K / σ_s`, so that
//! pure absorbers (`σ_s = 0`) need no special casing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, RectDomain};
use crate::integrate::{integrate, Estimate, GaussLegendre, QuadratureSpec};
use crate::special::{ki1_infinite_form, ki1_running_integral};

/// Constant extinction (`sigma_t`) and scattering (`sigma_s`) coefficients, cm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub sigma_t: f64,
    pub sigma_s: f64,
}

impl Material {
    pub fn new(sigma_t: f64, sigma_s: f64) -> Result<Self> {
        let m = Material { sigma_t, sigma_s };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma_t.is_finite() || self.sigma_t <= 0.0 {
            return Err(Error::domain(format!(
                "sigma_t must be positive, got {}",
                self.sigma_t
            )));
        }
        if !self.sigma_s.is_finite() || self.sigma_s < 0.0 || self.sigma_s > self.sigma_t {
            return Err(Error::domain(format!(
                "need 0 <= sigma_s <= sigma_t (subcritical), got sigma_s = {}, sigma_t = {}",
                self.sigma_s, self.sigma_t
            )));
        }
        Ok(())
    }

    pub fn sigma_a(&self) -> f64 {
        self.sigma_t - self.sigma_s
    }

    /// Scattering ratio `σ_s/σ`, the contraction constant of the integral operator.
    pub fn scattering_ratio(&self) -> f64 {
        self.sigma_s / self.sigma_t
    }
}

/// Scattering-free kernel `T(ρ) = Ki1(σρ) / (2πρ)` for `ρ > 0`.
#[inline]
pub fn transport_kernel(sigma_t: f64, rho: f64) -> f64 {
    ki1_infinite_form(sigma_t * rho) / (2.0 * PI * rho)
}

/// `K(x, y)`; fails on the diagonal, where the kernel is unbounded.
pub fn kernel_eval(m: &Material, x: &Point2, y: &Point2) -> Result<f64> {
    let rho = x.distance(y);
    if rho == 0.0 {
        return Err(Error::Singularity);
    }
    if !rho.is_finite() {
        return Err(Error::domain("non-finite kernel argument"));
    }
    Ok(m.sigma_s * transport_kernel(m.sigma_t, rho))
}

/// `∫_cell K(x, y) dy`. Exactly zero when `σ_s = 0`.
pub fn cell_integral(
    m: &Material,
    cell: &RectDomain,
    x: &Point2,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if m.sigma_s == 0.0 {
        return Ok(0.0);
    }
    Ok(m.sigma_s * transport_cell_integral(m.sigma_t, cell, x, spec)?.value)
}

/// `∫_cell T(x, y) dy` with its error estimate.
///
/// Targets that lie inside or within one cell diameter of the cell use the
/// polar decomposition about `x` ([`polar_integral`]); distant targets see a
/// smooth integrand and use adaptive tensor Gauss–Legendre.
pub fn transport_cell_integral(
    sigma_t: f64,
    cell: &RectDomain,
    x: &Point2,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    if cell.distance_to(x) <= cell.diameter() {
        polar_integral(sigma_t, cell, x, spec)
    } else {
        tensor_integral(sigma_t, cell, x, spec)
    }
}

/// Polar decomposition of `rect` about `x` into the four signed triangles
/// `(x, P, Q)` spanned by its edges. In the angle `α` measured from the foot
/// of the perpendicular, an edge at distance `d` is reached at `R = d / cos α`
/// and the radial integral of `ρ T(ρ)` is closed-form:
///
/// ```text
/// ∫₀^R Ki1(σρ)/(2π) dρ = ∫₀^{σR} Ki1(t) dt / (2πσ)
/// ```
///
/// so only the smooth angular integral is done numerically. Works for `x`
/// anywhere, but loses digits to cancellation when `x` is far outside.
pub fn polar_integral(
    sigma_t: f64,
    rect: &RectDomain,
    x: &Point2,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let corners = rect.corners();
    let edge_spec = QuadratureSpec {
        abs_tol: 0.25 * spec.abs_tol,
        ..*spec
    };
    let scale = 1.0 / (2.0 * PI * sigma_t);
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
    };
    for k in 0..4 {
        let p = corners[k];
        let q = corners[(k + 1) % 4];
        let len = p.distance(&q);
        let (e1, e2) = ((q.x1 - p.x1) / len, (q.x2 - p.x2) / len);
        // interior lies to the left of a counter-clockwise edge
        let d = (x.x1 - p.x1) * (-e2) + (x.x2 - p.x2) * e1;
        let dist = d.abs();
        if dist <= 1e-14 * len {
            continue;
        }
        let s_p = -((x.x1 - p.x1) * e1 + (x.x2 - p.x2) * e2);
        let s_q = s_p + len;
        let (a0, a1) = ((s_p / dist).atan(), (s_q / dist).atan());
        let est = integrate(
            |alpha: f64| ki1_running_integral(sigma_t * dist / alpha.cos()),
            a0,
            a1,
            &edge_spec,
        )?;
        let sign = d.signum();
        total.value += sign * est.value;
        total.error += est.error;
    }
    total.value *= scale;
    total.error *= scale;
    Ok(total)
}

// Nested tensor rules whose difference serves as the error estimate.
const TENSOR_ORDERS: [(usize, usize); 2] = [(4, 6), (6, 10)];

thread_local! {
    static GL_RULES: Vec<GaussLegendre> = (0..=10).map(|n| GaussLegendre::new(n.max(1))).collect();
}

fn tensor_rule(sigma_t: f64, rect: &RectDomain, x: &Point2, rule: &GaussLegendre) -> f64 {
    let (l, u) = (rect.lower(), rect.upper());
    let (c1, h1) = (0.5 * (l.x1 + u.x1), 0.5 * (u.x1 - l.x1));
    let (c2, h2) = (0.5 * (l.x2 + u.x2), 0.5 * (u.x2 - l.x2));
    let mut sum = 0.0;
    for (t2, w2) in rule.nodes.iter().zip(&rule.weights) {
        let y2 = c2 + h2 * t2;
        let mut row = 0.0;
        for (t1, w1) in rule.nodes.iter().zip(&rule.weights) {
            let y1 = c1 + h1 * t1;
            row += w1 * transport_kernel(sigma_t, (x.x1 - y1).hypot(x.x2 - y2));
        }
        sum += w2 * row;
    }
    sum * h1 * h2
}

fn tensor_integral(
    sigma_t: f64,
    cell: &RectDomain,
    x: &Point2,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let mut budget = spec.max_subdivisions;
    let first = tensor_recursive(sigma_t, cell, x, spec.abs_tol, spec.rel_tol, &mut budget);
    first.map_err(|best| Error::Accuracy {
        estimate: best.value,
        error_bound: best.error,
    })
}

fn tensor_recursive(
    sigma_t: f64,
    rect: &RectDomain,
    x: &Point2,
    abs_tol: f64,
    rel_tol: f64,
    budget: &mut usize,
) -> std::result::Result<Estimate, Estimate> {
    let mut best = Estimate {
        value: f64::NAN,
        error: f64::INFINITY,
    };
    for (lo, hi) in TENSOR_ORDERS {
        let (a, b) = GL_RULES.with(|r| {
            (
                tensor_rule(sigma_t, rect, x, &r[lo]),
                tensor_rule(sigma_t, rect, x, &r[hi]),
            )
        });
        best = Estimate {
            value: b,
            error: (a - b).abs(),
        };
        if best.error <= abs_tol.max(rel_tol * b.abs()) {
            return Ok(best);
        }
    }
    if *budget == 0 {
        return Err(best);
    }
    *budget -= 1;
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
    };
    for q in rect.quarters() {
        let part = if q.distance_to(x) <= q.diameter() {
            polar_integral(
                sigma_t,
                &q,
                x,
                &QuadratureSpec {
                    abs_tol: 0.25 * abs_tol,
                    rel_tol,
                    max_subdivisions: 200,
                },
            )
            .map_err(|_| best)?
        } else {
            tensor_recursive(sigma_t, &q, x, 0.25 * abs_tol, rel_tol, budget)?
        };
        total.value += part.value;
        total.error += part.error;
    }
    Ok(total)
}

/// `∫_domain K(x, y) dy` for `x` in the (closed) domain. For any bounded
/// domain this is strictly below the whole-plane value `σ_s/σ`, which is
/// what makes the fixed-point map a contraction.
pub fn domain_integral_bound_check(
    m: &Material,
    domain: &RectDomain,
    x: &Point2,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !domain.contains(x) {
        return Err(Error::precondition(format!(
            "point {x:?} is outside the domain"
        )));
    }
    if m.sigma_s == 0.0 {
        return Ok(0.0);
    }
    Ok(m.sigma_s * polar_integral(m.sigma_t, domain, x, spec)?.value)
}

/// Multi-index `(α1, α2)` of a partial derivative in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiIndex(pub usize, pub usize);

impl MultiIndex {
    pub fn order(&self) -> usize {
        self.0 + self.1
    }
}

/// Largest finite-difference step allowed relative to `ρ`.
pub const MAX_STEP_RATIO: f64 = 0.01;

/// Central finite-difference estimate of `D_x^α K(x, y)`, with one level of
/// Richardson extrapolation (`h` and `h/2`). Requires `|α| ∈ {1, 2}` and
/// `step ≤ ρ/100`.
pub fn derivative_bound_probe(
    m: &Material,
    x: &Point2,
    y: &Point2,
    alpha: MultiIndex,
    step: f64,
) -> Result<f64> {
    let rho = x.distance(y);
    if rho == 0.0 {
        return Err(Error::Singularity);
    }
    if !(1..=2).contains(&alpha.order()) {
        return Err(Error::domain(format!(
            "derivative order {} not in {{1, 2}}",
            alpha.order()
        )));
    }
    if !(step > 0.0) || step > MAX_STEP_RATIO * rho * (1.0 + 1e-12) {
        return Err(Error::precondition(format!(
            "finite-difference step {step:e} must be in (0, rho/100] with rho = {rho:e}"
        )));
    }
    let k = |d1: f64, d2: f64| {
        m.sigma_s * transport_kernel(m.sigma_t, (x.x1 + d1 - y.x1).hypot(x.x2 + d2 - y.x2))
    };
    let stencil = |h: f64| -> f64 {
        match alpha {
            MultiIndex(1, 0) => (k(h, 0.0) - k(-h, 0.0)) / (2.0 * h),
            MultiIndex(0, 1) => (k(0.0, h) - k(0.0, -h)) / (2.0 * h),
            MultiIndex(2, 0) => (k(h, 0.0) - 2.0 * k(0.0, 0.0) + k(-h, 0.0)) / (h * h),
            MultiIndex(0, 2) => (k(0.0, h) - 2.0 * k(0.0, 0.0) + k(0.0, -h)) / (h * h),
            MultiIndex(1, 1) => (k(h, h) - k(h, -h) - k(-h, h) + k(-h, -h)) / (4.0 * h * h),
            _ => unreachable!(),
        }
    };
    Ok((4.0 * stencil(0.5 * step) - stencil(step)) / 3.0)
}

/// [`derivative_bound_probe`] with the default step `ρ/100`.
pub fn derivative_probe(m: &Material, x: &Point2, y: &Point2, alpha: MultiIndex) -> Result<f64> {
    derivative_bound_probe(m, x, y, alpha, MAX_STEP_RATIO * x.distance(y))
}
