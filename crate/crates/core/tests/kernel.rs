mod common;

use std::f64::consts::PI;

use common::{rel_err, KI1_ORACLE};
use proptest::prelude::*;
use radtrans::kernel::{
    cell_integral, derivative_probe, domain_integral_bound_check, kernel_eval, polar_integral,
    transport_cell_integral, Material, MultiIndex,
};
use radtrans::{Point2, QuadratureSpec, RectDomain};

fn spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_subdivisions: 200,
    }
}

fn scattering_materials() -> [Material; 2] {
    [
        Material::new(1.0, 0.8).unwrap(),
        Material::new(10.0, 9.0).unwrap(),
    ]
}

/// Largest over smallest of `|D^α K|·ρ^{|α|+1}` along a ray of dyadic distances.
fn derivative_scaling_ratio(m: &Material, alpha: MultiIndex) -> f64 {
    let y = Point2::new(0.5, 0.5);
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let scaled: Vec<f64> = (1..=10)
        .map(|k| {
            let rho = 2f64.powi(-k) / m.sigma_t;
            let x = y.offset(rho * c, rho * s);
            derivative_probe(m, &x, &y, alpha).unwrap().abs() * rho.powi(alpha.order() as i32 + 1)
        })
        .collect();
    let max = scaled.iter().cloned().fold(0.0, f64::max);
    let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

#[test]
fn kernel_composes_the_ki1_oracle() {
    let m = Material::new(1.0, 0.8).unwrap();
    let ki1_01 = KI1_ORACLE.iter().find(|(r, _)| *r == 0.1).unwrap().1;
    let got = kernel_eval(&m, &Point2::new(0.2, 0.3), &Point2::new(0.3, 0.3)).unwrap();
    assert!(rel_err(got, 0.8 / (0.2 * PI) * ki1_01) < 1e-10);
    let absorber = Material::new(1.0, 0.0).unwrap();
    assert_eq!(
        kernel_eval(&absorber, &Point2::new(0.0, 0.0), &Point2::new(0.5, 0.1)).unwrap(),
        0.0
    );
}

#[test]
fn derivative_scaling_is_bounded() {
    for m in scattering_materials() {
        for alpha in [
            MultiIndex(1, 0),
            MultiIndex(0, 1),
            MultiIndex(2, 0),
            MultiIndex(1, 1),
            MultiIndex(0, 2),
        ] {
            let ratio = derivative_scaling_ratio(&m, alpha);
            assert!(ratio <= 10.0, "{m:?} {alpha:?}: ratio {ratio}");
        }
    }
}

#[test]
fn domain_integral_below_scattering_ratio() {
    let d = RectDomain::unit_square();
    for m in scattering_materials() {
        for k in 0..100 {
            let x = Point2::new((k % 10) as f64 / 9.0, (k / 10) as f64 / 9.0);
            let v = domain_integral_bound_check(&m, &d, &x, &spec()).unwrap();
            assert!(v > 0.0 && v < m.scattering_ratio(), "{m:?} at {x:?}: {v}");
        }
    }
}

#[test]
fn domain_integral_of_large_medium_approaches_scattering_ratio() {
    let m = Material::new(1.0, 0.5).unwrap();
    let d = RectDomain::new(Point2::new(-20.0, -20.0), Point2::new(20.0, 20.0)).unwrap();
    let v = domain_integral_bound_check(&m, &d, &Point2::new(0.0, 0.0), &spec()).unwrap();
    assert!(v < 0.5 && v > 0.5 * (1.0 - 1e-6), "{v}");
}

#[test]
fn domain_integral_rejects_outside_points() {
    let m = Material::new(1.0, 0.5).unwrap();
    assert!(domain_integral_bound_check(
        &m,
        &RectDomain::unit_square(),
        &Point2::new(1.5, 0.5),
        &spec()
    )
    .is_err());
}

#[test]
fn quarters_add_up_to_the_whole_cell() {
    let rect = RectDomain::new(Point2::new(0.0, 0.0), Point2::new(0.4, 0.2)).unwrap();
    for x in [
        Point2::new(0.1, 0.05),
        Point2::new(0.2, 0.1),
        Point2::new(0.5, 0.3),
        Point2::new(0.0, 0.0),
    ] {
        let whole = transport_cell_integral(2.0, &rect, &x, &spec())
            .unwrap()
            .value;
        let parts: f64 = rect
            .quarters()
            .iter()
            .map(|q| transport_cell_integral(2.0, q, &x, &spec()).unwrap().value)
            .sum();
        assert!(
            (whole - parts).abs() < 1e-10 * whole,
            "{x:?}: {whole} vs {parts}"
        );
    }
}

#[test]
fn pure_absorber_cells_integrate_to_zero() {
    let m = Material::new(3.0, 0.0).unwrap();
    let cell = RectDomain::unit_square();
    assert_eq!(
        cell_integral(&m, &cell, &Point2::new(0.5, 0.5), &spec()).unwrap(),
        0.0
    );
}

#[test]
fn small_cell_centered_integral_matches_singular_expansion() {
    let a = 1e-4;
    let x = Point2::new(0.0, 0.0);
    let rect = RectDomain::new(
        Point2::new(-a / 2.0, -a / 2.0),
        Point2::new(a / 2.0, a / 2.0),
    )
    .unwrap();
    let got = polar_integral(1.0, &rect, &x, &spec()).unwrap().value;
    // Ki1 ≈ π/2 near zero, so the integral is (1/4)·∫_square dy/ρ = (1/4)·4a·ln(1+√2).
    let want = a * (1.0 + 2f64.sqrt()).ln();
    assert!((got - want).abs() < 1e-3 * want, "{got} vs {want}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kernel_bounds_near_the_diagonal(
        x1 in 0.0f64..1.0, x2 in 0.0f64..1.0, theta in 0.0f64..(2.0 * PI), t in 1e-6f64..1.0, which in 0usize..2
    ) {
        let m = scattering_materials()[which];
        let rho = t / m.sigma_t * (1.0 - 1e-12);
        let x = Point2::new(x1, x2);
        let y = x.offset(rho * theta.cos(), rho * theta.sin());
        let k = kernel_eval(&m, &x, &y).unwrap();
        let rho = x.distance(&y);
        prop_assert!(k <= m.sigma_s / (4.0 * rho));
        prop_assert!(k > 0.3 * m.sigma_s / (2.0 * PI * rho));
    }
}

proptest! {
    #[test]
    fn kernel_is_symmetric(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
        let m = Material::new(1.5, 1.0).unwrap();
        let (x, y) = (Point2::new(a, b), Point2::new(c, d));
        prop_assume!(x.distance(&y) > 1e-9);
        prop_assert_eq!(kernel_eval(&m, &x, &y).unwrap(), kernel_eval(&m, &y, &x).unwrap());
    }

    #[test]
    fn kernel_is_invariant_under_rigid_motions(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0,
        phi in 0.0f64..(2.0 * PI), tx in -3.0f64..3.0, ty in -3.0f64..3.0
    ) {
        let m = Material::new(2.0, 1.0).unwrap();
        let (x, y) = (Point2::new(a, b), Point2::new(c, d));
        prop_assume!(x.distance(&y) > 1e-6);
        let motion = |p: &Point2| Point2::new(
            phi.cos() * p.x1 - phi.sin() * p.x2 + tx,
            phi.sin() * p.x1 + phi.cos() * p.x2 + ty,
        );
        let k0 = kernel_eval(&m, &x, &y).unwrap();
        let k1 = kernel_eval(&m, &motion(&x), &motion(&y)).unwrap();
        prop_assert!((k0 - k1).abs() <= 1e-12 * k0);
    }

    #[test]
    fn cell_integral_invariant_under_translation_and_quarter_turns(
        px in -0.5f64..1.5, py in -0.5f64..1.5, tx in -2.0f64..2.0, ty in -2.0f64..2.0
    ) {
        let m = Material::new(1.0, 1.0).unwrap();
        let cell = RectDomain::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.5)).unwrap();
        let x = Point2::new(px, py);
        let base = cell_integral(&m, &cell, &x, &spec()).unwrap();
        let shifted = RectDomain::new(Point2::new(tx, ty), Point2::new(1.0 + tx, 0.5 + ty)).unwrap();
        let v = cell_integral(&m, &shifted, &x.offset(tx, ty), &spec()).unwrap();
        prop_assert!((v - base).abs() <= 1e-9 * base.max(1e-3));
        // quarter turn (x1, x2) -> (-x2, x1)
        let turned = RectDomain::new(Point2::new(-0.5, 0.0), Point2::new(0.0, 1.0)).unwrap();
        let v = cell_integral(&m, &turned, &Point2::new(-py, px), &spec()).unwrap();
        prop_assert!((v - base).abs() <= 1e-9 * base.max(1e-3));
    }

    #[test]
    fn cell_integral_is_positive_and_below_whole_plane(px in -1.0f64..2.0, py in -1.0f64..2.0) {
        let m = Material::new(1.0, 0.7).unwrap();
        let v = cell_integral(&m, &RectDomain::unit_square(), &Point2::new(px, py), &spec()).unwrap();
        prop_assert!(v > 0.0 && v < 0.7);
    }
}
