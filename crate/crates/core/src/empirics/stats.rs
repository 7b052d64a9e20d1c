//! Goodness-of-fit tests shared by the empirical checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// One-sample Kolmogorov-Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// `P(sup |B(t)| > lambda)` for a Brownian bridge.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // the alternating series converges slowly here and the value is 1 to
        // double precision
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS test of `samples` against a continuous CDF. The p-value uses the
/// asymptotic distribution with Stephens' finite-sample correction.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsTest {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let sq = nf.sqrt();
    KsTest { statistic: d, p_value: kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d), n }
}

/// Rayleigh test for uniformity of angles on the circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayleighTest {
    /// Length of the mean unit vector.
    pub resultant_length: f64,
    /// `n * R^2`.
    pub z: f64,
    pub p_value: f64,
    pub n: usize,
}

impl RayleighTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

pub fn rayleigh_test(angles: &[f64]) -> RayleighTest {
    let n = angles.len();
    let nf = n as f64;
    let (c, s) = angles.iter().fold((0.0, 0.0), |(c, s), t| (c + t.cos(), s + t.sin()));
    let r = (c * c + s * s).sqrt() / nf;
    let z = nf * r * r;
    // second-order expansion of the null distribution
    let p = (-z).exp()
        * (1.0 + (2.0 * z - z * z) / (4.0 * nf)
            - (24.0 * z - 132.0 * z * z + 76.0 * z.powi(3) - 9.0 * z.powi(4)) / (288.0 * nf * nf));
    RayleighTest { resultant_length: r, z, p_value: p.clamp(0.0, 1.0), n }
}

/// Pearson chi-square goodness-of-fit test.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Cells after pooling sparse ones.
    pub cells: usize,
}

impl ChiSquareTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Chi-square test of `observed` counts against cell probabilities `probs`.
/// Consecutive cells are pooled, left to right, until each expected count is
/// at least `min_expected`; the pooling depends on `probs` only.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquareTest {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let cells = pool_cells(observed, probs, n, min_expected);
    let statistic: f64 = cells
        .iter()
        .map(|&(o, p)| {
            let e = n * p;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64).map(|c| c.sf(statistic)).unwrap_or(f64::NAN);
    ChiSquareTest { statistic, dof, p_value, cells: cells.len() }
}

fn pool_cells(observed: &[u64], probs: &[f64], n: f64, min_expected: f64) -> Vec<(u64, f64)> {
    let mut cells: Vec<(u64, f64)> = Vec::new();
    let mut acc = (0u64, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        acc = (acc.0 + o, acc.1 + p);
        if acc.1 * n >= min_expected {
            cells.push(acc);
            acc = (0, 0.0);
        }
    }
    if acc.0 > 0 || acc.1 > 0.0 {
        match cells.last_mut() {
            Some(last) => *last = (last.0 + acc.0, last.1 + acc.1),
            None => cells.push(acc),
        }
    }
    cells
}

/// Empirical quantile of sorted data (lower order statistic at `ceil(q n)`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

/// Sample mean and unbiased variance.
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
