//! Frozen reference values shared by the integration tests.

#![allow(dead_code)]

/// `(r, Ki1(r))` from 30-digit mpmath quadrature of the angle form
/// `∫₀^{π/2} e^{−r/cos θ} dθ`, cross-checked against the cosh form
/// `∫₀^∞ e^{−r cosh u}/cosh u du` (agreement below 1e-29 at every point).
pub const KI1_ORACLE: [(f64, f64); 9] = [
    (1e-6, 1.570_781_395_352_822_995_3),
    (1e-3, 1.562_772_639_303_837_698_5),
    (0.1, 1.228_631_883_036_922_232_2),
    (0.5, 0.643_693_805_863_747_545_78),
    (1.0, 0.328_286_478_171_118_353_01),
    (2.0, 0.097_120_592_478_067_936_717),
    (5.0, 0.003_408_936_066_530_569_925_6),
    (10.0, 1.701_517_891_775_940_009_4e-5),
    (20.0, 5.608_816_316_551_496_996_7e-10),
];

pub fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}
