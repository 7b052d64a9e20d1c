//! Discretized transfer operator `P^s f(x) = E|Ax|^s f(A.x)` on the circle
//! (`d = 2`), and its leading eigen-triple by power iteration.
//!
//! Bin `i` covers angles `[2 pi i / n, 2 pi (i + 1) / n)`, except that an
//! image landing exactly on a bin edge goes to the lower-index bin.
//! Column `j` of the matrix holds `E[|A x_j|^s 1{A.x_j in bin i}]` for the
//! bin centre `x_j`, so the operator acts on functions as `M^T` and on
//! measures as `M`.

use std::f64::consts::TAU;

use crate::error::{config, Error, Result};
use crate::linalg::Mat;
use crate::mc::{parallel_tasks, McConfig, McEstimate, MeanAccumulator};
use crate::model::{CoefficientPair, ModelSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedOperator {
    pub s: f64,
    pub n_bins: usize,
    /// `n_bins x n_bins`, non-negative.
    pub matrix: Mat,
    /// Draws per column.
    pub build_samples: u64,
    /// Draws with `A x = 0`, over all columns.
    pub skipped: u64,
    /// Built from `A^T` (the operator `P*^s`).
    pub adjoint: bool,
    /// Per-column estimate of `E|A x_j|^s`, the column sum.
    pub column_mass: Vec<McEstimate>,
}

/// Centre angle of bin `j`.
pub fn bin_center(j: usize, n_bins: usize) -> f64 {
    TAU * (j as f64 + 0.5) / n_bins as f64
}

/// Bin of the angle `theta` in `[0, 2 pi)`; edges go to the lower index.
pub fn bin_index(theta: f64, n_bins: usize) -> usize {
    let u = theta * n_bins as f64 / TAU;
    let k = u.ceil() as i64 - 1;
    k.clamp(0, n_bins as i64 - 1) as usize
}

/// Angle of `(x, y)` in `[0, 2 pi)`.
pub fn angle(x: f64, y: f64) -> f64 {
    let t = y.atan2(x);
    if t < 0.0 { t + TAU } else { t }
}

/// Monte-Carlo discretization of `P^s` (or `P*^s` when `adjoint`), with
/// `samples` independent draws per column.
pub fn build_operator(
    spec: &ModelSpec,
    s: f64,
    n_bins: usize,
    samples: u64,
    adjoint: bool,
    cfg: &McConfig,
) -> Result<DiscretizedOperator> {
    if spec.d() != 2 {
        return config(format!("the transfer operator is discretized for d = 2 only, got d = {}", spec.d()));
    }
    if n_bins == 0 || samples == 0 {
        return config("need at least one bin and one sample per column");
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("moment exponent must be non-negative, got {s}")));
    }
    let task_cfg = if adjoint { cfg.derive(0xad) } else { *cfg };
    let columns = parallel_tasks(&task_cfg, n_bins, |j, rng| {
        let theta = bin_center(j, n_bins);
        let (cx, cy) = (theta.cos(), theta.sin());
        let mut pair = CoefficientPair::zeros(2);
        let mut col = vec![0.0; n_bins];
        let mut mass = MeanAccumulator::new();
        let mut skipped = 0u64;
        for _ in 0..samples {
            spec.sample_into(rng, &mut pair);
            let a = pair.a.as_slice();
            let (y0, y1) = if adjoint {
                (a[0] * cx + a[2] * cy, a[1] * cx + a[3] * cy)
            } else {
                (a[0] * cx + a[1] * cy, a[2] * cx + a[3] * cy)
            };
            let r = y0.hypot(y1);
            if r == 0.0 {
                skipped += 1;
                continue;
            }
            let w = if s == 0.0 { 1.0 } else { r.powf(s) };
            col[bin_index(angle(y0, y1), n_bins)] += w;
            mass.push(w);
        }
        let accepted = (samples - skipped).max(1) as f64;
        col.iter_mut().for_each(|v| *v /= accepted);
        (col, mass.finish(&task_cfg), skipped)
    });
    let mut matrix = Mat::zeros(n_bins);
    let mut column_mass = Vec::with_capacity(n_bins);
    let mut skipped = 0;
    for (j, (col, mass, sk)) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            matrix.set(i, j, v);
        }
        column_mass.push(mass);
        skipped += sk;
    }
    Ok(DiscretizedOperator { s, n_bins, matrix, build_samples: samples, skipped, adjoint, column_mass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpectrum {
    pub eigenvalue: f64,
    /// Approximates `e_s`; normalized so that `sum_i e_i m_i = 1`.
    pub eigenfunction: Vec<f64>,
    /// Probability vector approximating `nu_s` (or `nu*_s` for an adjoint build).
    pub eigenmeasure: Vec<f64>,
    pub iterations: usize,
}

impl OperatorSpectrum {
    pub fn bin_angles(&self) -> Vec<f64> {
        let n = self.eigenmeasure.len();
        (0..n).map(|j| bin_center(j, n)).collect()
    }
}

/// Power iteration did not settle; the last iterate is attached.
#[derive(Clone, Debug, PartialEq)]
pub struct NotConverged {
    pub last: OperatorSpectrum,
}

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "power iteration did not converge after {} iterations (last eigenvalue {})",
            self.last.iterations, self.last.eigenvalue
        )
    }
}

impl std::error::Error for NotConverged {}

impl From<NotConverged> for Error {
    fn from(e: NotConverged) -> Self {
        Error::Numerical(e.to_string())
    }
}

/// Leading eigenvalue with the right eigenvector of `M^T` (eigenfunction)
/// and of `M` (eigenmeasure). Converged when both the eigenvalue estimate and
/// the normalized iterate change by less than `tol` (relative / L1).
pub fn power_iterate(op: &DiscretizedOperator, tol: f64, max_iter: usize) -> std::result::Result<OperatorSpectrum, NotConverged> {
    let m = &op.matrix;
    let transpose = m.transpose();
    let (lambda, measure, it1, ok1) = perron(m, tol, max_iter);
    let (_, mut function, it2, ok2) = perron(&transpose, tol, max_iter);
    let pairing: f64 = function.iter().zip(&measure).map(|(e, m)| e * m).sum();
    if pairing > 0.0 {
        function.iter_mut().for_each(|e| *e /= pairing);
    }
    let spectrum = OperatorSpectrum { eigenvalue: lambda, eigenfunction: function, eigenmeasure: measure, iterations: it1.max(it2) };
    if ok1 && ok2 { Ok(spectrum) } else { Err(NotConverged { last: spectrum }) }
}

/// Perron vector of a non-negative matrix, normalized to unit L1 norm.
fn perron(m: &Mat, tol: f64, max_iter: usize) -> (f64, Vec<f64>, usize, bool) {
    let n = m.dim();
    let mut v = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut lambda = f64::NAN;
    for it in 1..=max_iter {
        m.mul_vec_into(&v, &mut next);
        let total: f64 = next.iter().sum();
        if !(total > 0.0) {
            return (0.0, v, it, false);
        }
        next.iter_mut().for_each(|x| *x /= total);
        let change: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        let settled = (total - lambda).abs() <= tol * total && change <= tol;
        lambda = total;
        std::mem::swap(&mut v, &mut next);
        if settled {
            return (lambda, v, it, true);
        }
    }
    (lambda, v, max_iter, false)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationCheck {
    /// Least-squares constant `c`.
    pub c: f64,
    pub max_rel_deviation: f64,
}

/// Compares the eigenfunction with `c * sum_j |<x_i, y_j>|^s nu*_j`, where
/// `nu*` is the eigenmeasure of the adjoint operator.
pub fn eigenfunction_representation_check(spectrum: &OperatorSpectrum, adjoint: &OperatorSpectrum, s: f64) -> RepresentationCheck {
    let n = spectrum.eigenfunction.len();
    let m = adjoint.eigenmeasure.len();
    let rep: Vec<f64> = (0..n)
        .map(|i| {
            let ti = bin_center(i, n);
            (0..m).map(|j| (ti - bin_center(j, m)).cos().abs().powf(s) * adjoint.eigenmeasure[j]).sum()
        })
        .collect();
    let e = &spectrum.eigenfunction;
    let c = e.iter().zip(&rep).map(|(a, b)| a * b).sum::<f64>() / rep.iter().map(|b| b * b).sum::<f64>();
    let max_rel_deviation = e.iter().zip(&rep).map(|(a, b)| (a - c * b).abs() / a.abs()).fold(0.0, f64::max);
    RepresentationCheck { c, max_rel_deviation }
}

/// Deviation of an eigenmeasure from uniform, against bin-wise noise
/// measured on independently built replicates.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformityReport {
    /// Root-mean-square of `m_i - 1/n`.
    pub rms_deviation: f64,
    /// Root-mean-square of the bin-wise replicate standard deviations.
    pub rms_noise: f64,
    /// Largest `|m_i - 1/n| / sd_i`.
    pub max_z: f64,
}

impl UniformityReport {
    pub fn ratio(&self) -> f64 {
        self.rms_deviation / self.rms_noise
    }
}

pub fn uniformity_against_replicates(measure: &[f64], replicates: &[Vec<f64>]) -> UniformityReport {
    let n = measure.len();
    let target = 1.0 / n as f64;
    let r = replicates.len() as f64;
    let sd: Vec<f64> = (0..n)
        .map(|i| {
            let mean = replicates.iter().map(|m| m[i]).sum::<f64>() / r;
            (replicates.iter().map(|m| (m[i] - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt()
        })
        .collect();
    let rms_deviation = (measure.iter().map(|m| (m - target).powi(2)).sum::<f64>() / n as f64).sqrt();
    let rms_noise = (sd.iter().map(|s| s * s).sum::<f64>() / n as f64).sqrt();
    let max_z = measure.iter().zip(&sd).map(|(m, s)| (m - target).abs() / s).fold(0.0, f64::max);
    UniformityReport { rms_deviation, rms_noise, max_z }
}

/// Mass of the four quarter-arcs `[k pi/2, (k+1) pi/2)`, by bin centre.
pub fn quarter_arc_masses(measure: &[f64]) -> [f64; 4] {
    let n = measure.len();
    let mut q = [0.0; 4];
    for (j, m) in measure.iter().enumerate() {
        q[((bin_center(j, n) / (TAU / 4.0)) as usize).min(3)] += m;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::h_closed_form;

    fn det(c: f64) -> ModelSpec {
        // A = I - 1 * (1 - c) I = c I
        ModelSpec::deterministic(Mat::scalar(2, 1.0 - c), vec![0.0; 2], 1, 1.0).unwrap()
    }

    #[test]
    fn bin_edges_go_down() {
        let n = 8;
        assert_eq!(bin_index(0.0, n), 0);
        assert_eq!(bin_index(TAU / 8.0, n), 0);
        assert_eq!(bin_index(TAU / 8.0 + 1e-12, n), 1);
        assert_eq!(bin_index(TAU - 1e-12, n), 7);
        for j in 0..n {
            assert_eq!(bin_index(bin_center(j, n), n), j);
        }
    }

    #[test]
    fn identity_operator() {
        let cfg = McConfig::new(1);
        let op = build_operator(&det(1.0), 1.7, 16, 5, false, &cfg).unwrap();
        assert_eq!(op.matrix, Mat::identity(16));
        let sp = power_iterate(&op, 1e-12, 100).unwrap();
        assert!((sp.eigenvalue - 1.0).abs() < 1e-15);
        assert!(sp.eigenmeasure.iter().all(|m| (m - 1.0 / 16.0).abs() < 1e-15));
        assert!(sp.eigenfunction.iter().all(|e| (e - 1.0).abs() < 1e-12));
    }

    #[test]
    fn half_identity_operator() {
        let cfg = McConfig::new(1);
        let op = build_operator(&det(0.5), 1.0, 12, 3, false, &cfg).unwrap();
        let mut want = Mat::identity(12);
        want.scale_in_place(0.5);
        assert_eq!(op.matrix, want);
        let sp = power_iterate(&op, 1e-12, 100).unwrap();
        assert!((sp.eigenvalue - 0.5).abs() < 1e-15);
        let rep = eigenfunction_representation_check(&sp, &sp, 1.0);
        assert!(rep.max_rel_deviation < 1e-12);
    }

    #[test]
    fn markov_at_zero_and_representation() {
        let spec = ModelSpec::rank1_gauss(2, 8, 0.3).unwrap();
        let cfg = McConfig::new(2);
        let op = build_operator(&spec, 0.0, 32, 500, false, &cfg).unwrap();
        for j in 0..32 {
            let col: f64 = (0..32).map(|i| op.matrix.get(i, j)).sum();
            assert!((col - 1.0).abs() < 1e-12);
        }
        let adj = build_operator(&spec, 0.0, 32, 500, true, &cfg).unwrap();
        let (sp, sa) = (power_iterate(&op, 1e-10, 100_000).unwrap(), power_iterate(&adj, 1e-10, 100_000).unwrap());
        assert!((sp.eigenvalue - 1.0).abs() < 1e-10);
        let rep = eigenfunction_representation_check(&sp, &sa, 0.0);
        assert!(rep.max_rel_deviation < 1e-8, "{rep:?}");
    }

    #[test]
    fn eigenvalue_tracks_closed_form() {
        let spec = ModelSpec::rank1_gauss(2, 8, 0.3).unwrap();
        let cfg = McConfig::new(3);
        let op = build_operator(&spec, 1.0, 64, 2000, false, &cfg).unwrap();
        let sp = power_iterate(&op, 1e-10, 100_000).unwrap();
        let h = h_closed_form(&spec, 1.0, 200_000, &cfg).unwrap();
        assert!((sp.eigenvalue / h.mean - 1.0).abs() < 0.02);
        assert!(sp.eigenfunction.iter().all(|&e| e > 0.0));
        let q = quarter_arc_masses(&sp.eigenmeasure);
        assert!(q.iter().all(|&m| m >= 0.01));
    }

    #[test]
    fn rejects_other_dimensions() {
        let spec = ModelSpec::rank1_gauss(3, 2, 0.3).unwrap();
        assert!(build_operator(&spec, 1.0, 8, 10, false, &McConfig::new(0)).is_err());
    }
}
