//! Truncated-mean ladders as evidence for finite negative moments.

use crate::error::{Error, Result};
use crate::mc::{parallel_means, McConfig, McEstimate};
use crate::model::{CoefficientPair, ModelKind, ModelSpec};

pub const DEFAULT_CAPS: [f64; 5] = [10.0, 1e2, 1e3, 1e4, 1e5];
/// Relative change between the last two rungs below which a ladder counts
/// as stabilized.
pub const STABILIZATION_TOL: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrabilityTarget {
    /// `|det A|^-delta`, `delta < 1/2`.
    DetA,
    /// `||A^-1||^delta`.
    InvNormA,
    /// `|<H e2, e1>|^-delta`, `delta < 1`, unscaled `H`.
    OffDiagonal,
}

impl IntegrabilityTarget {
    pub fn name(self) -> &'static str {
        match self {
            IntegrabilityTarget::DetA => "det-a",
            IntegrabilityTarget::InvNormA => "inv-norm-a",
            IntegrabilityTarget::OffDiagonal => "off-diagonal",
        }
    }

    /// The quantity `X` whose power `X^-delta` is probed.
    fn base(self, pair: &CoefficientPair) -> f64 {
        match self {
            IntegrabilityTarget::DetA => pair.a.determinant().abs(),
            IntegrabilityTarget::InvNormA => pair.a.min_singular_value(),
            IntegrabilityTarget::OffDiagonal => pair.h.get(0, 1).abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrabilityReport {
    pub target: IntegrabilityTarget,
    pub delta: f64,
    pub caps: Vec<f64>,
    /// `E[min(X^-delta, M)]` for each cap `M`, on common draws.
    pub truncated_means: Vec<McEstimate>,
    /// Relative change between the last two rungs.
    pub last_change: f64,
    pub stabilized: bool,
}

/// Ladder of truncated means `E[min(X^-delta, M)]` over the caps, all rungs
/// computed from the same draws so the ladder is nondecreasing.
pub fn integrability_probe(
    spec: &ModelSpec,
    target: IntegrabilityTarget,
    delta: f64,
    samples: u64,
    caps: &[f64],
    cfg: &McConfig,
) -> Result<IntegrabilityReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    match target {
        IntegrabilityTarget::DetA if delta >= 0.5 => {
            return Err(Error::Domain(format!("det A probe needs delta < 1/2, got {delta}")));
        }
        IntegrabilityTarget::OffDiagonal if delta >= 1.0 => {
            return Err(Error::Domain(format!("off-diagonal probe needs delta < 1, got {delta}")));
        }
        IntegrabilityTarget::OffDiagonal if spec.d() < 2 => {
            return Err(Error::Config("off-diagonal probe needs d >= 2".into()));
        }
        _ => {}
    }
    if caps.is_empty() || caps.windows(2).any(|w| w[1] <= w[0]) || caps[0] <= 0.0 {
        return Err(Error::Config("caps must be positive and strictly increasing".into()));
    }
    if matches!(spec.kind(), ModelKind::Rank1Gauss) && spec.b() <= spec.d() + 1 {
        log::warn!("b = {} <= d + 1 = {}: outside the density regime of the Gaussian model", spec.b(), spec.d() + 1);
    }
    let d = spec.d();
    let truncated_means = parallel_means(cfg, samples, caps.len(), |rng, out| {
        let mut pair = CoefficientPair::zeros(d);
        spec.sample_into(rng, &mut pair);
        let x = target.base(&pair);
        // x = 0 gives an infinite power, which every cap truncates
        let v = x.powf(-delta);
        for (o, &m) in out.iter_mut().zip(caps) {
            *o = v.min(m);
        }
    });
    let k = truncated_means.len();
    let last_change = if k >= 2 {
        let (a, b) = (truncated_means[k - 2].mean, truncated_means[k - 1].mean);
        (b - a).abs() / b.abs()
    } else {
        f64::INFINITY
    };
    Ok(IntegrabilityReport {
        target,
        delta,
        caps: caps.to_vec(),
        truncated_means,
        last_change,
        stabilized: last_change < STABILIZATION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;

    #[test]
    fn deterministic_det_ladder() {
        // A = I - 0.5 I; |det A|^-delta = 2^(d delta)
        let spec = ModelSpec::deterministic(Mat::identity(3), vec![0.0; 3], 1, 0.5).unwrap();
        let rep = integrability_probe(&spec, IntegrabilityTarget::DetA, 0.25, 100, &DEFAULT_CAPS, &McConfig::new(1)).unwrap();
        let want = 2f64.powf(0.75);
        assert!(rep.truncated_means.iter().all(|m| (m.mean - want).abs() < 1e-12 && m.stderr == 0.0));
        assert!(rep.stabilized);
    }

    #[test]
    fn ladder_is_nondecreasing() {
        let spec = ModelSpec::rank1_gauss(2, 1, 0.5).unwrap();
        let cfg = McConfig::new(2);
        for target in [IntegrabilityTarget::DetA, IntegrabilityTarget::InvNormA, IntegrabilityTarget::OffDiagonal] {
            let rep = integrability_probe(&spec, target, 0.4, 20_000, &DEFAULT_CAPS, &cfg).unwrap();
            assert!(rep.truncated_means.windows(2).all(|w| w[0].mean <= w[1].mean), "{target:?}");
        }
    }

    #[test]
    fn preconditions() {
        let spec = ModelSpec::rank1_gauss(2, 8, 0.5).unwrap();
        let cfg = McConfig::new(3);
        assert!(integrability_probe(&spec, IntegrabilityTarget::DetA, 0.5, 10, &DEFAULT_CAPS, &cfg).is_err());
        assert!(integrability_probe(&spec, IntegrabilityTarget::OffDiagonal, 1.0, 10, &DEFAULT_CAPS, &cfg).is_err());
        assert!(integrability_probe(&spec, IntegrabilityTarget::InvNormA, 0.1, 10, &[10.0, 5.0], &cfg).is_err());
        let d1 = ModelSpec::rank1_gauss(1, 8, 0.5).unwrap();
        assert!(integrability_probe(&d1, IntegrabilityTarget::OffDiagonal, 0.5, 10, &DEFAULT_CAPS, &cfg).is_err());
    }
}
