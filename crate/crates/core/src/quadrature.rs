//! Adaptive Gauss-Kronrod (7/15) quadrature and the one-dimensional oracles
//! used to check Monte-Carlo estimators.

use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gaussian tail cut-off; `phi(40)` is far below the smallest double.
pub const GAUSS_CUTOFF: f64 = 40.0;

/// Kronrod estimate and `|Kronrod - Gauss|` on `[a, b]`.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration over `[a, b]`, bisecting the worst interval
/// until the summed error estimate is below `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    integrate_pieces(&f, &[a, b], tol)
}

/// Like [`integrate`] with the integration range pre-split at `breaks`
/// (ascending), e.g. at integrand singularities.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: f64) -> Result<Quadrature> {
    const MAX_INTERVALS: usize = 20_000;
    // a single 15-point rule can badly underestimate its error on a wide
    // interval, so every piece starts pre-split
    const PRESPLIT: usize = 16;
    let mut heap = BinaryHeap::new();
    let mut error = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            for k in 0..PRESPLIT {
                let a = w[0] + (w[1] - w[0]) * k as f64 / PRESPLIT as f64;
                let b = if k + 1 == PRESPLIT { w[1] } else { w[0] + (w[1] - w[0]) * (k + 1) as f64 / PRESPLIT as f64 };
                let (v, e) = gauss_kronrod_15(f, a, b);
                error += e;
                heap.push(Piece { a, b, value: v, error: e });
            }
        }
    }
    while error > tol && heap.len() < MAX_INTERVALS {
        let worst = heap.pop().expect("heap is non-empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gauss_kronrod_15(f, worst.a, m);
        let (v2, e2) = gauss_kronrod_15(f, m, worst.b);
        error += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, error: e2 });
    }
    // resum to shed the drift of the running update
    let value_sum: f64 = heap.iter().map(|p| p.value).sum();
    let error_sum: f64 = heap.iter().map(|p| p.error).sum();
    if !value_sum.is_finite() {
        return Err(Error::Numerical("quadrature produced a non-finite value".into()));
    }
    if error_sum > tol {
        return Err(Error::Numerical(format!(
            "quadrature did not reach tolerance {tol:e} (estimate {error_sum:e})"
        )));
    }
    Ok(Quadrature { value: value_sum, error: error_sum, intervals: heap.len() })
}

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Integrand family of the `d = 1`, `b = 1` Gaussian reduction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleKind {
    /// `E|1 - eta a^2|^s`
    Power(f64),
    /// `E log|1 - eta a^2|`
    Log,
}

/// `E|1 - eta a^2|^s` or `E log|1 - eta a^2|` for `a ~ N(0,1)`, absolute
/// error at most `1e-8`.
///
/// The range is split at the zero `a = eta^(-1/2)` of `1 - eta a^2` and
/// truncated at `|a| = 40`.
pub fn quadrature_oracle_d1(eta: f64, kind: OracleKind) -> Result<f64> {
    if !(eta.is_finite() && eta >= 0.0) {
        return domain(format!("eta must be non-negative, got {eta}"));
    }
    if let OracleKind::Power(s) = kind {
        if s <= -1.0 {
            return domain(format!("|1 - eta a^2|^s is not integrable for s = {s} <= -1"));
        }
        if s == 0.0 {
            return Ok(1.0);
        }
    }
    let f = |a: f64| {
        let r = (1.0 - eta * a * a).abs();
        let v = match kind {
            OracleKind::Power(s) => r.powf(s),
            OracleKind::Log => r.ln(),
        };
        if v.is_finite() { 2.0 * v * phi(a) } else { 0.0 }
    };
    let mut breaks = vec![0.0];
    if eta > 0.0 {
        let root = eta.powf(-0.5);
        if root < GAUSS_CUTOFF {
            breaks.push(root);
        }
    }
    breaks.push(GAUSS_CUTOFF);
    Ok(integrate_pieces(&f, &breaks, 1e-10)?.value)
}
