//! Uniformity of directions among the largest draws in `d = 2`.

use std::f64::consts::TAU;

use super::stats::{ks_test, quantile_sorted, rayleigh_test, KsTest, RayleighTest};
use crate::error::{Error, Result};
use crate::transfer::angle;

pub const DEFAULT_THRESHOLD_QUANTILE: f64 = 0.99;
pub const MIN_EXCEEDANCES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngularStatus {
    Pass,
    Fail,
    /// Fewer than [`MIN_EXCEEDANCES`] points above the threshold.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AngularReport {
    pub threshold: f64,
    pub exceedances: usize,
    pub ks: Option<KsTest>,
    pub rayleigh: Option<RayleighTest>,
    pub level: f64,
    pub status: AngularStatus,
}

/// Tests the angles of the points whose norm exceeds the `threshold_quantile`
/// of all norms against the uniform law on `[0, 2 pi)`, with a KS test and a
/// Rayleigh (resultant length) test. Both must have p-value above `level`.
pub fn angular_exceedance_test(points: &[[f64; 2]], threshold_quantile: f64, level: f64) -> Result<AngularReport> {
    if points.is_empty() || !(0.0..1.0).contains(&threshold_quantile) {
        return Err(Error::Config("need points and a threshold quantile in [0, 1)".into()));
    }
    let mut norms: Vec<f64> = points.iter().map(|p| p[0].hypot(p[1])).collect();
    norms.sort_by(f64::total_cmp);
    let threshold = quantile_sorted(&norms, threshold_quantile);
    let angles: Vec<f64> = points
        .iter()
        .filter(|p| p[0].hypot(p[1]) > threshold)
        .map(|p| angle(p[0], p[1]))
        .collect();
    let exceedances = angles.len();
    if exceedances < MIN_EXCEEDANCES {
        return Ok(AngularReport { threshold, exceedances, ks: None, rayleigh: None, level, status: AngularStatus::Inconclusive });
    }
    let ks = ks_test(&angles, |t| (t / TAU).clamp(0.0, 1.0));
    let rayleigh = rayleigh_test(&angles);
    let status = if ks.passes(level) && rayleigh.passes(level) { AngularStatus::Pass } else { AngularStatus::Fail };
    Ok(AngularReport { threshold, exceedances, ks: Some(ks), rayleigh: Some(rayleigh), level, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, spread: f64, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let r = (1.0 - rng.random::<f64>()).powf(-0.5);
                let t = spread * rng.random::<f64>();
                [r * t.cos(), r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn uniform_angles_pass() {
        let rep = angular_exceedance_test(&cloud(100_000, TAU, 1), 0.99, 0.01).unwrap();
        assert_eq!(rep.status, AngularStatus::Pass, "{rep:?}");
        assert!(rep.exceedances >= 999 && rep.exceedances <= 1000);
    }

    #[test]
    fn concentrated_angles_fail() {
        let rep = angular_exceedance_test(&cloud(100_000, 0.2, 2), 0.99, 0.01).unwrap();
        assert_eq!(rep.status, AngularStatus::Fail);
    }

    #[test]
    fn too_few_exceedances() {
        let rep = angular_exceedance_test(&cloud(10_000, TAU, 3), 0.99, 0.01).unwrap();
        assert_eq!(rep.status, AngularStatus::Inconclusive);
        assert!(rep.ks.is_none());
    }
}
