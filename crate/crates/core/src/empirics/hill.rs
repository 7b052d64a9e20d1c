//! Hill estimator of the tail index.

use crate::error::{Error, Result};

/// Default share of the sample used as upper order statistics.
pub const DEFAULT_K_FRACTION: f64 = 0.01;
/// Shares scanned by [`hill_stability_scan`].
pub const SCAN_FRACTIONS: [f64; 3] = [0.005, 0.01, 0.02];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailFit {
    pub alpha_hat: f64,
    pub k_order: usize,
    /// Asymptotic 95% interval `alpha_hat (1 -+ 1.96 / sqrt(k))`.
    pub ci: (f64, f64),
    /// `C` in `P(X > t) ~ C t^(-alpha)`, fitted at the threshold order
    /// statistic. A descriptive number only.
    pub amplitude: f64,
    /// The `(k+1)`-th largest value, the threshold.
    pub threshold: f64,
    pub n: usize,
}

impl TailFit {
    pub fn covers(&self, alpha: f64) -> bool {
        self.ci.0 <= alpha && alpha <= self.ci.1
    }

    pub fn stderr(&self) -> f64 {
        self.alpha_hat / (self.k_order as f64).sqrt()
    }
}

pub fn default_k(n: usize) -> usize {
    ((n as f64 * DEFAULT_K_FRACTION) as usize).max(1)
}

/// Hill estimate from the `k` largest values of `samples`.
pub fn hill_estimate(samples: &[f64], k: usize) -> Result<TailFit> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    hill_estimate_sorted(&sorted, k)
}

/// Like [`hill_estimate`] on data already sorted in decreasing order.
pub fn hill_estimate_sorted(desc: &[f64], k: usize) -> Result<TailFit> {
    let n = desc.len();
    if k == 0 || k >= n {
        return Err(Error::Config(format!("k_order must lie in 1..{n}, got {k}")));
    }
    let top = &desc[..=k];
    if top.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Domain("zero, negative or non-finite value among the top order statistics".into()));
    }
    if top.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("ties among the top order statistics".into()));
    }
    let threshold = desc[k];
    let log_t = threshold.ln();
    let mean_excess = top[..k].iter().map(|x| x.ln() - log_t).sum::<f64>() / k as f64;
    let alpha_hat = 1.0 / mean_excess;
    let half = 1.96 / (k as f64).sqrt();
    Ok(TailFit {
        alpha_hat,
        k_order: k,
        ci: (alpha_hat * (1.0 - half), alpha_hat * (1.0 + half)),
        amplitude: (k as f64 / n as f64) * threshold.powf(alpha_hat),
        threshold,
        n,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityScan {
    pub fits: Vec<TailFit>,
    /// `(alpha at smallest k - alpha at largest k) / combined stderr`.
    pub drift_z: f64,
    /// Estimates change monotonically in `k` with `|drift_z| > 3`.
    pub drifting: bool,
}

/// Hill estimates at the shares [`SCAN_FRACTIONS`] of the sample.
pub fn hill_stability_scan(samples: &[f64]) -> Result<StabilityScan> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    let fits = SCAN_FRACTIONS
        .iter()
        .map(|f| hill_estimate_sorted(&sorted, ((n as f64 * f) as usize).max(1)))
        .collect::<Result<Vec<_>>>()?;
    let (first, last) = (&fits[0], &fits[fits.len() - 1]);
    let drift_z = (first.alpha_hat - last.alpha_hat) / first.stderr().hypot(last.stderr());
    let dec = fits.windows(2).all(|w| w[0].alpha_hat > w[1].alpha_hat);
    let inc = fits.windows(2).all(|w| w[0].alpha_hat < w[1].alpha_hat);
    Ok(StabilityScan { drifting: (dec || inc) && drift_z.abs() > 3.0, fits, drift_z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pareto(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)).collect()
    }

    #[test]
    fn pareto_two() {
        let fit = hill_estimate(&pareto(2.0, 100_000, 1), 1000).unwrap();
        assert!((fit.alpha_hat - 2.0).abs() < 0.13, "{fit:?}");
        assert!(fit.covers(2.0));
        // P(X > t) = t^-2 exactly, so the amplitude is near 1
        assert!((fit.amplitude - 1.0).abs() < 0.3);
    }

    #[test]
    fn consistency_over_k() {
        let x = pareto(1.5, 1_000_000, 2);
        for k in [100, 1000, 10_000] {
            let fit = hill_estimate(&x, k).unwrap();
            assert!((fit.alpha_hat - 1.5).abs() <= 3.0 * 1.5 / (k as f64).sqrt());
        }
    }

    #[test]
    fn exponential_drifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..100_000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let scan = hill_stability_scan(&x).unwrap();
        assert!(scan.drifting, "{scan:?}");
        assert!(scan.fits[0].alpha_hat > scan.fits[2].alpha_hat);
        assert!(!hill_stability_scan(&pareto(2.0, 100_000, 6)).unwrap().drifting);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(hill_estimate(&[2.0; 100], 10).is_err());
        let mut x = pareto(2.0, 100, 7);
        x.iter_mut().for_each(|v| *v = 0.0);
        assert!(hill_estimate(&x, 10).is_err());
        assert!(hill_estimate(&pareto(2.0, 10, 8), 10).is_err());
    }

    proptest! {
        #[test]
        fn ci_widens_as_k_shrinks(seed in 0u64..1000) {
            let x = pareto(2.0, 2000, seed);
            let a = hill_estimate(&x, 200).unwrap();
            let b = hill_estimate(&x, 50).unwrap();
            let rel = |f: &TailFit| (f.ci.1 - f.ci.0) / f.alpha_hat;
            prop_assert!(a.alpha_hat > 0.0 && b.alpha_hat > 0.0);
            prop_assert!(rel(&b) > rel(&a));
        }
    }
}
