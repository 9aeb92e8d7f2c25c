//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) and
//! Gauss–Legendre rules of arbitrary order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances for an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::domain(format!(
                "quadrature tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::domain("max_subdivisions must be at least 1"));
        }
        Ok(())
    }

    /// Tolerance target for an estimate of magnitude `value`.
    #[inline]
    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_subdivisions: 200,
        }
    }
}

/// Integral value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

// Kronrod abscissae (positive half, descending), Kronrod and Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Single 15-point Gauss–Kronrod panel on `[a, b]` with the QUADPACK error heuristic.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Estimate { value, error: err }
}

struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.est.error.total_cmp(&other.est.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// error meets `spec`, or `spec.max_subdivisions` bisections were spent, in
/// which case [`Error::Accuracy`] carries the best estimate.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    integrate_with_breaks(f, &[a, b], spec)
}

/// Like [`integrate`], seeded with the panels delimited by `breaks` (ascending).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    debug_assert!(breaks.len() >= 2);
    let mut heap = BinaryHeap::with_capacity(breaks.len() + spec.max_subdivisions);
    let (mut total, mut err) = (0.0, 0.0);
    for w in breaks.windows(2) {
        let est = gk15(&f, w[0], w[1]);
        total += est.value;
        err += est.error;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            est,
        });
    }
    let mut splits = 0;
    while err > spec.target(total) {
        if splits >= spec.max_subdivisions {
            return Err(Error::Accuracy {
                estimate: total,
                error_bound: err,
            });
        }
        let worst = heap.pop().expect("non-empty panel heap");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        total += left.value + right.value - worst.est.value;
        err += left.error + right.error - worst.est.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            est: right,
        });
        splits += 1;
    }
    // Re-sum to shed drift from the incremental updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.est.value, e + p.est.error));
    Ok(Estimate { value, error })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, refined by Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}
