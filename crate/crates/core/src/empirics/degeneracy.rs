//! Detects models whose draws share a fixed point `x = A x + B`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::mc::{parallel_collect, McConfig};
use crate::model::{CoefficientPair, ModelSpec};

/// Side of the cells in which fixed points count as equal.
pub const AGREEMENT_RESOLUTION: f64 = 1e-8;
/// Agreement fraction at or above which the model is flagged.
pub const DEGENERACY_FLAG: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyReport {
    pub solved: u64,
    /// Draws with singular `I - A` or a non-finite solution.
    pub skipped: u64,
    /// Largest share of solved draws whose fixed points fall in one cell.
    pub max_agreement: f64,
    /// Centre of the most popular cell.
    pub common_point: Option<Vec<f64>>,
    pub flagged: bool,
}

/// Solves `(I - A) x = B` per draw and reports how many draws agree on one
/// solution to within [`AGREEMENT_RESOLUTION`].
pub fn fixed_point_degeneracy_check(spec: &ModelSpec, samples: u64, cfg: &McConfig) -> Result<DegeneracyReport> {
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let d = spec.d();
    let points = parallel_collect(cfg, samples, |rng| {
        let mut pair = CoefficientPair::zeros(d);
        spec.sample_into(rng, &mut pair);
        let mut m = Mat::identity(d);
        m.add_scaled(-1.0, &pair.a);
        m.solve(&pair.b).filter(|x| x.iter().all(|v| v.is_finite()))
    });
    let solved: Vec<Vec<f64>> = points.into_iter().flatten().collect();
    let skipped = samples - solved.len() as u64;
    if solved.is_empty() {
        return Ok(DegeneracyReport { solved: 0, skipped, max_agreement: 0.0, common_point: None, flagged: false });
    }
    // two grids offset by half a cell, so a cluster split by a cell edge in
    // one grid is whole in the other
    let mut best = (0usize, Vec::new());
    for offset in [0.0, 0.5] {
        let mut cells: HashMap<Vec<i64>, usize> = HashMap::new();
        for x in &solved {
            *cells.entry(cell(x, offset)).or_default() += 1;
        }
        if let Some((key, &count)) = cells.iter().max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0))) {
            if count > best.0 {
                let centre = key.iter().map(|&k| (k as f64 + 0.5 - offset) * AGREEMENT_RESOLUTION).collect();
                best = (count, centre);
            }
        }
    }
    let max_agreement = best.0 as f64 / solved.len() as f64;
    Ok(DegeneracyReport {
        solved: solved.len() as u64,
        skipped,
        max_agreement,
        common_point: Some(best.1),
        flagged: max_agreement >= DEGENERACY_FLAG,
    })
}

fn cell(x: &[f64], offset: f64) -> Vec<i64> {
    // saturating cast: far-away points all land in the outermost cells
    x.iter().map(|v| (v / AGREEMENT_RESOLUTION + offset).floor() as i64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficients_flagged() {
        // A = 1 - 0.5 = 0.5, B = 1: x = 2 for every draw
        let spec = ModelSpec::deterministic(Mat::scalar(1, 0.5), vec![1.0], 1, 1.0).unwrap();
        let rep = fixed_point_degeneracy_check(&spec, 500, &McConfig::new(1)).unwrap();
        assert!(rep.flagged && rep.max_agreement == 1.0);
        assert!((rep.common_point.unwrap()[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn zero_b_flagged() {
        let spec = ModelSpec::new(
            crate::model::ModelKind::Symm {
                h_law: crate::model::SymmLaw::Goe { mean: 1.0, scale: 0.3 },
                b_law: crate::model::BLaw::constant(vec![0.0, 0.0]),
            },
            2,
            2,
            0.5,
        )
        .unwrap();
        let rep = fixed_point_degeneracy_check(&spec, 500, &McConfig::new(2)).unwrap();
        assert!(rep.flagged);
    }

    #[test]
    fn gaussian_model_not_flagged() {
        let spec = ModelSpec::rank1_gauss(2, 4, 0.5).unwrap();
        let rep = fixed_point_degeneracy_check(&spec, 2000, &McConfig::new(3)).unwrap();
        assert!(!rep.flagged && rep.max_agreement < 0.01);
    }
}
