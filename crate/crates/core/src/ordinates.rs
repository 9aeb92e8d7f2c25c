//! Level-symmetric (LQ_N) discrete-ordinate sets restricted to x-y geometry.
//!
//! The 3D set is folded onto the `ξ > 0` half space, doubling each weight,
//! and normalized so that `Σ w = 1`; the scalar flux is then `φ = Σ w ψ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One direction of the 2D set: in-plane cosines and weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ordinate {
    pub mu: f64,
    pub eta: f64,
    pub weight: f64,
}

impl Ordinate {
    /// Out-of-plane cosine `ξ = √(1 − μ² − η²)`.
    pub fn xi(&self) -> f64 {
        (1.0 - self.mu * self.mu - self.eta * self.eta)
            .max(0.0)
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteOrdinateSet {
    order: usize,
    directions: Vec<Ordinate>,
}

/// Tabulated first cosine and per-class point weights (octant sum 1), 7 digits.
/// Classes enumerate the sorted index triples `i ≤ j ≤ k`, `i + j + k = N/2 + 2`,
/// in lexicographic order.
fn table(order: usize) -> Option<(f64, &'static [f64])> {
    Some(match order {
        2 => (0.577_350_269_189_625_8, &[1.0]),
        // μ1 is fixed by Σwμ⁴ = 1/5: 6μ1⁴ − 4μ1² + 2/5 = 0 (table value 0.3500212)
        4 => (((4.0 - 6.4f64.sqrt()) / 12.0).sqrt(), &[0.333_333_3]),
        6 => (0.266_635_5, &[0.176_126_3, 0.157_207_1]),
        8 => (0.218_217_9, &[0.120_987_7, 0.090_740_7, 0.092_592_6]),
        12 => (
            0.167_212_6,
            &[
                0.070_762_6,
                0.055_881_1,
                0.037_337_7,
                0.050_281_9,
                0.025_851_3,
            ],
        ),
        16 => (
            0.138_956_8,
            &[
                0.048_987_2,
                0.041_329_6,
                0.021_232_6,
                0.025_620_7,
                0.036_048_6,
                0.014_458_9,
                0.034_495_8,
                0.008_517_9,
            ],
        ),
        _ => return None,
    })
}

/// Largest correction the moment projection may apply to a tabulated weight.
const TRANSCRIPTION_TOLERANCE: f64 = 5e-7;

pub const SUPPORTED_ORDERS: [usize; 6] = [2, 4, 6, 8, 12, 16];

impl DiscreteOrdinateSet {
    /// Builds a set from explicit directions, checking the structural invariants.
    pub fn from_directions(order: usize, directions: Vec<Ordinate>) -> Result<Self> {
        for d in &directions {
            if !(d.mu.abs() > 0.0 && d.mu.abs() < 1.0 && d.eta.abs() > 0.0 && d.eta.abs() < 1.0) {
                return Err(Error::domain(format!(
                    "direction cosines out of (0,1): {d:?}"
                )));
            }
            if d.mu * d.mu + d.eta * d.eta >= 1.0 {
                return Err(Error::domain(format!(
                    "direction has no out-of-plane component: {d:?}"
                )));
            }
            if !(d.weight > 0.0) {
                return Err(Error::domain(format!("non-positive weight: {d:?}")));
            }
        }
        Ok(DiscreteOrdinateSet { order, directions })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn directions(&self) -> &[Ordinate] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Smallest `|μ|` (equal to the smallest `|η|` for level-symmetric sets).
    pub fn min_cosine(&self) -> f64 {
        self.directions
            .iter()
            .flat_map(|d| [d.mu.abs(), d.eta.abs()])
            .fold(f64::INFINITY, f64::min)
    }

    /// Test hook: a copy with one weight replaced.
    pub fn with_weight(&self, index: usize, weight: f64) -> Self {
        let mut s = self.clone();
        s.directions[index].weight = weight;
        s
    }
}

/// Index triples of one octant, and their weight class.
fn octant_points(order: usize) -> (Vec<[usize; 3]>, Vec<[usize; 3]>) {
    let n = order / 2;
    let mut points = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            for k in 1..=n {
                if i + j + k == n + 2 {
                    points.push([i, j, k]);
                }
            }
        }
    }
    let mut classes: Vec<[usize; 3]> = points
        .iter()
        .map(|p| {
            let mut s = *p;
            s.sort_unstable();
            s
        })
        .collect();
    classes.sort_unstable();
    classes.dedup();
    (points, classes)
}

fn level_cosines(order: usize, mu1: f64) -> Vec<f64> {
    let n = order / 2;
    if n == 1 {
        return vec![mu1];
    }
    let delta = 2.0 * (1.0 - 3.0 * mu1 * mu1) / (order as f64 - 2.0);
    (0..n)
        .map(|i| (mu1 * mu1 + i as f64 * delta).sqrt())
        .collect()
}

/// Level-symmetric set of the given order, folded to x-y geometry.
///
/// Direction cosines follow from the tabulated `μ1` through the
/// level-symmetric recursion `μᵢ² = μ₁² + (i−1)·2(1−3μ₁²)/(N−2)`. The
/// tabulated weights are then moved to the nearest point (least-norm
/// correction) satisfying the even-moment conditions
/// `Σ_octant w μ^{2k} = 1/(2k+1)`, `k < N/2`; a correction larger than the
/// table's rounding is reported as an error.
pub fn level_symmetric(order: usize) -> Result<DiscreteOrdinateSet> {
    let (mu1, tab) = table(order).ok_or_else(|| {
        Error::domain(format!(
            "unsupported quadrature order {order}; supported: {SUPPORTED_ORDERS:?}"
        ))
    })?;
    let mus = level_cosines(order, mu1);
    let (points, classes) = octant_points(order);
    let n = order / 2;
    let class_of = |p: &[usize; 3]| {
        let mut s = *p;
        s.sort_unstable();
        classes.iter().position(|c| *c == s).expect("class exists")
    };

    let a = DMatrix::from_fn(n, classes.len(), |k, c| {
        points
            .iter()
            .filter(|p| class_of(p) == c)
            .map(|p| mus[p[0] - 1].powi(2 * k as i32))
            .sum::<f64>()
    });
    let b = DVector::from_fn(n, |k, _| 1.0 / (2.0 * k as f64 + 1.0));
    let w_tab = DVector::from_column_slice(tab);
    let pinv = a
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::domain(format!("moment system pseudo-inverse failed: {e}")))?;
    let correction = &pinv * (&b - &a * &w_tab);
    if correction.amax() > TRANSCRIPTION_TOLERANCE {
        return Err(Error::domain(format!(
            "S{order} table inconsistent with the moment conditions (correction {:e})",
            correction.amax()
        )));
    }
    let weights = w_tab + correction;

    // quadrant sign patterns in sweep order: (+,+), (−,+), (−,−), (+,−)
    let signs = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
    let mut directions = Vec::with_capacity(4 * points.len());
    for (s_mu, s_eta) in signs {
        for p in &points {
            directions.push(Ordinate {
                mu: s_mu * mus[p[0] - 1],
                eta: s_eta * mus[p[1] - 1],
                // 1/8 per 3D octant, doubled by the ξ fold
                weight: weights[class_of(p)] / 4.0,
            });
        }
    }
    DiscreteOrdinateSet::from_directions(order, directions)
}

/// Diagnostic moments of a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub sum_w: f64,
    pub sum_w_mu2: f64,
    pub sum_w_eta2: f64,
    pub sum_w_mu4: f64,
    /// Whether the fourth moment is expected to be exact (order ≥ 4).
    pub checks_mu4: bool,
    /// Largest mismatch when reflecting `μ → −μ`, `η → −η`, or swapping `μ ↔ η`.
    pub symmetry_residual: f64,
    /// Names of the quantities that deviate beyond [`MOMENT_TOLERANCE`].
    pub flagged: Vec<String>,
}

impl MomentReport {
    pub fn is_clean(&self) -> bool {
        self.flagged.is_empty()
    }
}

pub const MOMENT_TOLERANCE: f64 = 1e-10;

pub fn validate_moments(set: &DiscreteOrdinateSet) -> MomentReport {
    let dirs = set.directions();
    let sum = |f: &dyn Fn(&Ordinate) -> f64| dirs.iter().map(|d| d.weight * f(d)).sum::<f64>();
    let sum_w = sum(&|_| 1.0);
    let sum_w_mu2 = sum(&|d| d.mu * d.mu);
    let sum_w_eta2 = sum(&|d| d.eta * d.eta);
    let sum_w_mu4 = sum(&|d| d.mu.powi(4));

    let image_mismatch = |map: &dyn Fn(&Ordinate) -> (f64, f64)| {
        dirs.iter()
            .map(|d| {
                let (mu, eta) = map(d);
                dirs.iter()
                    .map(|e| (e.mu - mu).abs() + (e.eta - eta).abs() + (e.weight - d.weight).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    let symmetry_residual = image_mismatch(&|d| (-d.mu, d.eta))
        .max(image_mismatch(&|d| (d.mu, -d.eta)))
        .max(image_mismatch(&|d| (d.eta, d.mu)));

    let checks_mu4 = set.order() >= 4;
    let mut flagged = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        if (got - want).abs() > MOMENT_TOLERANCE {
            flagged.push(format!("{name}: {got:.15} (expected {want:.15})"));
        }
    };
    check("sum_w", sum_w, 1.0);
    check("sum_w_mu2", sum_w_mu2, 1.0 / 3.0);
    check("sum_w_eta2", sum_w_eta2, 1.0 / 3.0);
    if checks_mu4 {
        check("sum_w_mu4", sum_w_mu4, 0.2);
    }
    check("symmetry", symmetry_residual, 0.0);
    MomentReport {
        sum_w,
        sum_w_mu2,
        sum_w_eta2,
        sum_w_mu4,
        checks_mu4,
        symmetry_residual,
        flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s2_single_direction_per_quadrant() {
        let s = level_symmetric(2).unwrap();
        assert_eq!(s.len(), 4);
        for d in s.directions() {
            assert!((d.mu.abs() - 1.0 / 3f64.sqrt()).abs() < 1e-7);
            assert_eq!(d.mu.abs(), d.eta.abs());
            assert_eq!(d.weight, 0.25);
        }
        let r = validate_moments(&s);
        assert_eq!(r.sum_w, 1.0);
        assert!((r.sum_w_mu2 - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.is_clean(), "{:?}", r.flagged);
    }

    #[test]
    fn s4_cosine_matches_table() {
        assert!((table(4).unwrap().0 - 0.350_021_2).abs() < TRANSCRIPTION_TOLERANCE);
    }

    #[test]
    fn direction_counts() {
        for n in SUPPORTED_ORDERS {
            let s = level_symmetric(n).unwrap();
            assert_eq!(s.len(), 4 * n * (n + 2) / 8, "S{n}");
        }
        assert_eq!(level_symmetric(12).unwrap().len(), 84);
    }

    #[test]
    fn unsupported_orders() {
        for n in [0, 1, 3, 10, 14, 18] {
            assert!(matches!(level_symmetric(n), Err(Error::Domain(_))), "S{n}");
        }
    }

    #[test]
    fn perturbed_weight_is_flagged() {
        let s = level_symmetric(12).unwrap();
        let bad = s.with_weight(5, s.directions()[5].weight * (1.0 + 1e-6));
        let r = validate_moments(&bad);
        assert!(!r.is_clean());
        assert!(r.flagged.iter().any(|f| f.starts_with("sum_w")));
    }

    #[test]
    fn invariants_of_all_sets() {
        for n in SUPPORTED_ORDERS {
            let s = level_symmetric(n).unwrap();
            let r = validate_moments(&s);
            assert!(r.is_clean(), "S{n}: {:?}", r.flagged);
            for d in s.directions() {
                assert!(d.weight > 0.0);
                assert!(d.xi() > 0.0);
            }
        }
    }

    #[test]
    fn from_directions_rejects_bad_input() {
        let ok = Ordinate {
            mu: 0.5,
            eta: 0.5,
            weight: 1.0,
        };
        assert!(DiscreteOrdinateSet::from_directions(2, vec![ok]).is_ok());
        let flat = Ordinate {
            mu: 0.8,
            eta: 0.6,
            weight: 1.0,
        };
        assert!(DiscreteOrdinateSet::from_directions(2, vec![flat]).is_err());
        let neg = Ordinate {
            mu: 0.5,
            eta: 0.5,
            weight: -1.0,
        };
        assert!(DiscreteOrdinateSet::from_directions(2, vec![neg]).is_err());
    }
}
