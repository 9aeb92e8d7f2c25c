//! The first Bickley–Naylor function
//!
//! ```text
//! Ki1(r) = ∫₀¹ e^{−r/t} / √(1−t²) dt = ∫₀^{π/2} e^{−r/sin θ} dθ
//!        = ∫₁^∞ e^{−r t} / (t √(t²−1)) dt = ∫₀^∞ e^{−r cosh u} / cosh u du
//! ```
//!
//! arises when the 3D point kernel `σ_s e^{−σ|x−y|} / (4π|x−y|²)` is
//! integrated along the third coordinate.
//!
//! Note on the infinite-interval form: it is sometimes printed as
//! `∫₁^∞ e^{−rt}/√(1−t²) dt`, which is not real-valued on `t > 1`. The form
//! used here follows from substituting `t → σρ t` in
//! `∫_{σρ}^∞ e^{−t} / (t √(t² − σ²ρ²)) dt`, giving the `t √(t²−1)` denominator.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::integrate::{integrate_with_breaks, QuadratureSpec};

/// Beyond this argument `e^{−r}` underflows and `Ki1(r)` is returned as zero.
pub const UNDERFLOW_ARGUMENT: f64 = 745.0;

const KI1_SPEC: QuadratureSpec = QuadratureSpec {
    abs_tol: 1e-300,
    rel_tol: 1e-13,
    max_subdivisions: 400,
};

fn check_argument(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::domain(format!(
            "Ki1 argument must be finite and non-negative, got {r}"
        )));
    }
    Ok(())
}

/// `Ki1(r)` by adaptive Gauss–Kronrod quadrature of the angle form.
///
/// `Ki1(0) = π/2` exactly. The result lies in `(0, π/2]`, is strictly
/// decreasing, and has relative error below `1e−12` wherever it does not underflow.
pub fn ki1(r: f64) -> Result<f64> {
    ki1_with_spec(r, &KI1_SPEC)
}

pub fn ki1_with_spec(r: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_argument(r)?;
    if r == 0.0 {
        return Ok(FRAC_PI_2);
    }
    if r > UNDERFLOW_ARGUMENT {
        return Ok(0.0);
    }
    // The integrand switches from ~0 to ~e^{-r} around θ ≈ r; seed panels there.
    let mut breaks = vec![0.0];
    for b in [0.25 * r, r, 4.0 * r] {
        if b < 0.5 * FRAC_PI_2 {
            breaks.push(b);
        }
    }
    breaks.push(FRAC_PI_2);
    let est = integrate_with_breaks(|theta: f64| (-r / theta.sin()).exp(), &breaks, spec)?;
    Ok(est.value)
}

/// Trapezoidal step for the `cosh` form. The integrand is analytic in the
/// strip `|Im u| < π/2`, so the error decays like `exp(−π²/h)`; large
/// arguments narrow the peak at `u = 0` to a width of order `r^{−1/2}`.
#[inline]
fn trapezoid_step(r: f64) -> f64 {
    if r <= 1.0 {
        0.25
    } else {
        0.25 / r.sqrt()
    }
}

/// Sums `h Σ' g(kh)` for a decreasing positive `g` until terms stop mattering.
#[inline]
fn trapezoid_tail<G: Fn(f64) -> f64>(g: G, h: f64) -> f64 {
    let mut sum = 0.5 * g(0.0);
    let mut k = 1.0;
    loop {
        let term = g(k * h);
        sum += term;
        if term <= 1e-18 * sum {
            break;
        }
        k += 1.0;
    }
    h * sum
}

/// `Ki1(r)` from the infinite-interval form `∫₀^∞ e^{−r cosh u}/cosh u du`
/// with the trapezoidal rule. Agrees with [`ki1`] to ~1e−15 relative and is
/// an order of magnitude cheaper, so the kernel uses it on hot paths.
///
/// The argument must be finite and non-negative; this is checked only in debug builds.
#[inline]
pub fn ki1_infinite_form(r: f64) -> f64 {
    debug_assert!(r.is_finite() && r >= 0.0, "Ki1 argument {r}");
    if r == 0.0 {
        return FRAC_PI_2;
    }
    if r > UNDERFLOW_ARGUMENT {
        return 0.0;
    }
    trapezoid_tail(
        |u| {
            let c = u.cosh();
            (-r * c).exp() / c
        },
        trapezoid_step(r),
    )
}

/// `∫₀^z Ki1(t) dt`, the radial antiderivative used by polar cell quadrature.
///
/// Evaluated as `∫₀^∞ (1 − e^{−z cosh u}) / cosh² u du`, which equals
/// `1 − Ki2(z)` without the cancellation of that difference at small `z`.
/// Tends to 1 as `z → ∞`.
#[inline]
pub fn ki1_running_integral(z: f64) -> f64 {
    debug_assert!(z.is_finite() && z >= 0.0, "argument {z}");
    if z == 0.0 {
        return 0.0;
    }
    // The integrand tends to 1/cosh²u for every z, so the small-argument step suffices.
    trapezoid_tail(
        |u| {
            let c = u.cosh();
            -(-z * c).exp_m1() / (c * c)
        },
        0.25,
    )
}

/// Evaluates `Ki1(r)` from both the finite-interval (angle) form and the
/// infinite-interval form, returned in that order.
pub fn ki1_equivalence_check(r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!(
            "equivalence check needs a finite r > 0, got {r}"
        )));
    }
    Ok((ki1(r)?, ki1_infinite_form(r)))
}
