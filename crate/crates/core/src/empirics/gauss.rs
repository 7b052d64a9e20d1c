//! Distributional checks of the Gaussian rank-one model: chi-square
//! diagonals of `H` and the inner-product density of random unit vectors.

use rand_distr::StandardNormal;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use super::stats::{chi_square_gof, ks_test, mean_var, ChiSquareTest, KsTest};
use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};
use crate::mc::{parallel_collect, McConfig};
use crate::model::{ModelKind, ModelSpec};
use crate::quadrature::integrate;

pub const STAM_BINS: usize = 50;
/// Sparse chi-square cells are pooled up to this expected count.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalStat {
    pub index: usize,
    pub ks: KsTest,
    pub mean: f64,
    pub variance: f64,
    /// `(mean - b) / se`.
    pub z_mean: f64,
    /// `(variance - 2b) / se`.
    pub z_variance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalReport {
    pub b: usize,
    pub samples: u64,
    pub diagonals: Vec<DiagonalStat>,
}

impl DiagonalReport {
    pub fn passes(&self, level: f64, z_max: f64) -> bool {
        self.diagonals
            .iter()
            .all(|s| s.ks.passes(level) && s.z_mean.abs() <= z_max && s.z_variance.abs() <= z_max)
    }
}

/// KS test of each unscaled diagonal `H_ll = sum_i a_il^2` against the
/// chi-square law with `b` degrees of freedom, plus moment checks.
pub fn chi2_diagonal_check(spec: &ModelSpec, samples: u64, cfg: &McConfig) -> Result<DiagonalReport> {
    if !matches!(spec.kind(), ModelKind::Rank1Gauss) {
        return Err(Error::Unsupported("the chi-square diagonal check needs the Gaussian rank-one model".into()));
    }
    if samples < 2 {
        return Err(Error::Config("need at least two samples".into()));
    }
    let (d, b) = (spec.d(), spec.b());
    let draws = parallel_collect(cfg, samples, |rng| {
        let mut h = Mat::zeros(d);
        spec.sample_h_into(rng, &mut h);
        (0..d).map(|l| h.get(l, l)).collect::<Vec<_>>()
    });
    let law = ChiSquared::new(b as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    let n = samples as f64;
    let bf = b as f64;
    // Var(sample variance) ~ (mu4 - sigma^4) / n with mu4 = 12b + 12b^2
    let se_var = ((12.0 * bf + 8.0 * bf * bf) / n).sqrt();
    let se_mean = (2.0 * bf / n).sqrt();
    let diagonals = (0..d)
        .map(|l| {
            let x: Vec<f64> = draws.iter().map(|v| v[l]).collect();
            let (mean, variance) = mean_var(&x);
            DiagonalStat {
                index: l,
                ks: ks_test(&x, |t| law.cdf(t)),
                mean,
                variance,
                z_mean: (mean - bf) / se_mean,
                z_variance: (variance - 2.0 * bf) / se_var,
            }
        })
        .collect();
    Ok(DiagonalReport { b, samples, diagonals })
}

/// Density of `<Y1, Y2>` for independent uniform unit vectors in `R^b`,
/// `b > 1`, on `(-1, 1)`.
pub fn stam_density(b: usize, u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let bf = b as f64;
    let log_c = ln_gamma(bf / 2.0) - ln_gamma((bf - 1.0) / 2.0) - 0.5 * std::f64::consts::PI.ln();
    (log_c + 0.5 * (bf - 3.0) * (1.0 - u * u).ln()).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StamReport {
    pub b: usize,
    pub samples: u64,
    pub mean: f64,
    pub variance: f64,
    /// Per-bin probabilities of the density, by quadrature.
    pub bin_probs: Vec<f64>,
    pub counts: Vec<u64>,
    pub gof: ChiSquareTest,
}

/// Chi-square fit of sampled inner products of random unit vectors in `R^b`
/// against [`stam_density`] over [`STAM_BINS`] equal bins of `(-1, 1)`.
pub fn stam_p2_check(b: usize, samples: u64, cfg: &McConfig) -> Result<StamReport> {
    if b <= 3 {
        return Err(Error::Domain(format!("the inner-product check needs b > 3, got {b}")));
    }
    if samples < 2 {
        return Err(Error::Config("need at least two samples".into()));
    }
    let u = parallel_collect(cfg, samples, |rng| {
        let mut y1 = vec![0.0; b];
        let mut y2 = vec![0.0; b];
        y1.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        y2.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        dot(&y1, &y2) / (dot(&y1, &y1) * dot(&y2, &y2)).sqrt()
    });
    let width = 2.0 / STAM_BINS as f64;
    let mut counts = vec![0u64; STAM_BINS];
    for &v in &u {
        let k = (((v + 1.0) / width) as usize).min(STAM_BINS - 1);
        counts[k] += 1;
    }
    let bin_probs = (0..STAM_BINS)
        .map(|k| {
            let lo = -1.0 + k as f64 * width;
            integrate(|x| stam_density(b, x), lo, lo + width, 1e-12).map(|q| q.value)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, variance) = mean_var(&u);
    let gof = chi_square_gof(&counts, &bin_probs, MIN_EXPECTED_COUNT);
    Ok(StamReport { b, samples, mean, variance, bin_probs, counts, gof })
}
