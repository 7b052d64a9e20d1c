//! Tail index `alpha` with `h(xi, alpha) = 1`, the critical step `xi_1` with
//! `h(xi_1, 1) = 1`, alpha curves and `(parameter, s)` grids of `h`.
//!
//! All roots are found on a frozen [`ColumnSample`], so the function being
//! solved is deterministic and convex in `s` (and in `xi`).

use crate::contour::{marching_squares, Polyline};
use crate::error::{Error, Result};
use crate::mc::{McConfig, McEstimate};
use crate::model::ModelSpec;
use crate::spectral::{ColumnSample, S_MAX};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaOptions {
    /// Required `|h(xi, alpha) - 1|`.
    pub tol_root: f64,
    pub s_max: f64,
    /// Polish the bisection root with safeguarded Newton steps.
    pub newton: bool,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        AlphaOptions { tol_root: 1e-3, s_max: S_MAX, newton: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaStatus {
    Converged,
    /// `h(xi, s) < 1` on all of `(0, s_max]`; read as `alpha > s_max`.
    NoRootBelowSMax,
    /// `gamma >= 0`, so `h(xi, s) >= 1` for every `s > 0`.
    GammaNonNegative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSolve {
    pub xi: f64,
    /// Root, or NaN when not converged.
    pub alpha: f64,
    /// `h(xi, alpha) - 1` on the solving sample.
    pub residual: f64,
    pub bracket: (f64, f64),
    /// `sqrt(se_h^2 + residual^2) / |dh/ds|` at the root.
    pub stderr_alpha: f64,
    pub status: AlphaStatus,
    pub gamma: McEstimate,
}

impl AlphaSolve {
    pub fn is_converged(&self) -> bool {
        self.status == AlphaStatus::Converged
    }

    /// `alpha`, with `NoRootBelowSMax` mapped to infinity.
    pub fn alpha_or_inf(&self) -> f64 {
        match self.status {
            AlphaStatus::Converged => self.alpha,
            AlphaStatus::NoRootBelowSMax => f64::INFINITY,
            AlphaStatus::GammaNonNegative => f64::NAN,
        }
    }
}

/// Root of `s -> h(xi, s) - 1` on `(0, s_max]` for a frozen sample.
pub fn solve_alpha_on(sample: &ColumnSample, xi: f64, opts: &AlphaOptions) -> AlphaSolve {
    let gamma = sample.gamma(xi);
    let g = |s: f64| sample.h_value(xi, s) - 1.0;
    let unsolved = |status, bracket| AlphaSolve {
        xi,
        alpha: f64::NAN,
        residual: f64::NAN,
        bracket,
        stderr_alpha: f64::NAN,
        status,
        gamma: gamma.clone(),
    };
    // h(0) = 1 and h'(0) = gamma on this sample; convexity rules out a
    // positive root when gamma >= 0.
    if !(gamma.mean < 0.0) {
        return unsolved(AlphaStatus::GammaNonNegative, (0.0, 0.0));
    }

    let mut hi = opts.s_max.min(0.25);
    let mut lo = 0.0;
    let mut g_hi = g(hi);
    while g_hi < 0.0 {
        if hi >= opts.s_max {
            return unsolved(AlphaStatus::NoRootBelowSMax, (hi, opts.s_max));
        }
        lo = hi;
        hi = (2.0 * hi).min(opts.s_max);
        g_hi = g(hi);
    }
    if lo == 0.0 {
        // root below the first scan point: find s > 0 with h < 1
        lo = hi;
        for _ in 0..60 {
            lo *= 0.5;
            if g(lo) < 0.0 {
                break;
            }
        }
    }

    let (mut best, mut g_best) = (hi, g_hi);
    for _ in 0..200 {
        if g_best.abs() <= 0.1 * opts.tol_root || hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if gm.abs() < g_best.abs() {
            best = mid;
            g_best = gm;
        }
    }
    if opts.newton {
        for _ in 0..8 {
            if g_best == 0.0 {
                break;
            }
            let slope = sample.dh_ds(xi, best).mean;
            if !(slope > 0.0) {
                break;
            }
            let next = best - g_best / slope;
            if !(next > lo && next < hi) {
                break;
            }
            let gn = g(next);
            if gn.abs() >= g_best.abs() {
                break;
            }
            if gn < 0.0 {
                lo = next;
            } else {
                hi = next;
            }
            best = next;
            g_best = gn;
            if gn.abs() < 1e-13 {
                break;
            }
        }
    }
    let h_at = sample.h(xi, best);
    let slope = sample.dh_ds(xi, best).mean.abs();
    let status = if g_best.abs() <= opts.tol_root { AlphaStatus::Converged } else { AlphaStatus::NoRootBelowSMax };
    AlphaSolve {
        xi,
        alpha: if status == AlphaStatus::Converged { best } else { f64::NAN },
        residual: g_best,
        bracket: (lo, hi),
        stderr_alpha: h_at.stderr.hypot(g_best) / slope,
        status,
        gamma,
    }
}

/// Tail index at the model's `xi`, on a fresh frozen sample.
pub fn solve_alpha(spec: &ModelSpec, opts: &AlphaOptions, samples: u64, cfg: &McConfig) -> AlphaSolve {
    solve_alpha_on(&ColumnSample::for_spec(spec, samples, cfg), spec.xi(), opts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Xi1Options {
    /// Relative width of the final bracket.
    pub tol: f64,
    pub xi_max: f64,
}

impl Default for Xi1Options {
    fn default() -> Self {
        Xi1Options { tol: 1e-9, xi_max: 1e6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Xi1Solve {
    pub xi1: f64,
    /// `h(xi_1, 1) - 1`.
    pub residual: f64,
    pub bracket: (f64, f64),
    /// `(xi, h(xi, 1) - 1)` pairs visited while bracketing.
    pub scan: Vec<(f64, f64)>,
    pub mean_diag: McEstimate,
}

/// Unique root in `xi > 0` of `h(xi, 1) = 1`.
///
/// Requires `E<H e_1, e_1> > 0` beyond three standard errors, which makes
/// `h(., 1)` start below 1.
pub fn solve_xi1_on(sample: &ColumnSample, opts: &Xi1Options) -> Result<Xi1Solve> {
    let mean_diag = sample.mean_diag();
    if !(mean_diag.mean > 3.0 * mean_diag.stderr && mean_diag.mean > 0.0) {
        return Err(Error::Config(format!(
            "E<He1,e1> = {} +- {} is not positive beyond 3 standard errors",
            mean_diag.mean, mean_diag.stderr
        )));
    }
    let g = |xi: f64| sample.h_value(xi, 1.0) - 1.0;
    let mut scan = Vec::new();
    let mut lo = 1.0 / (16.0 * mean_diag.mean);
    let mut g_lo = g(lo);
    scan.push((lo, g_lo));
    let mut halvings = 0;
    while g_lo >= 0.0 && halvings < 60 {
        lo *= 0.5;
        g_lo = g(lo);
        scan.push((lo, g_lo));
        halvings += 1;
    }
    if g_lo >= 0.0 {
        return Err(Error::Numerical(format!("h(xi, 1) never drops below 1; scan {scan:?}")));
    }
    let mut hi = lo;
    let mut g_hi = g_lo;
    while g_hi < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > opts.xi_max {
            return Err(Error::Numerical(format!(
                "no sign change of h(xi, 1) - 1 below xi = {}; scan {scan:?}",
                opts.xi_max
            )));
        }
        g_hi = g(hi);
        scan.push((hi, g_hi));
    }
    for _ in 0..200 {
        if hi - lo <= opts.tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let xi1 = 0.5 * (lo + hi);
    Ok(Xi1Solve { xi1, residual: g(xi1), bracket: (lo, hi), scan, mean_diag })
}

pub fn solve_xi1(spec: &ModelSpec, opts: &Xi1Options, samples: u64, cfg: &McConfig) -> Result<Xi1Solve> {
    solve_xi1_on(&ColumnSample::for_spec(spec, samples, cfg), opts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    /// `alpha` strictly decreases along the ascending `xi` grid (points with
    /// no root below `s_max` count as `+inf`; points with `gamma >= 0` are
    /// left out).
    pub strictly_decreasing: bool,
    /// Consecutive pairs whose decrease exceeds the combined uncertainty.
    pub resolved_pairs: usize,
    pub pairs: usize,
    /// Indices into `points` of each `alpha` not above its successor.
    pub violations: Vec<usize>,
    /// The smallest `xi` has the largest `alpha`.
    pub first_is_max: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaCurve {
    /// One solve per grid point, sorted by ascending `xi`.
    pub points: Vec<AlphaSolve>,
    pub xi1: Option<Xi1Solve>,
    pub monotonicity: MonotonicityReport,
}

/// `alpha(xi)` over `xi_grid` for the law of `H` in `spec` (its `eta` is
/// ignored). Points within 5% of `xi_1` are re-solved on a sample four times
/// larger with a ten times smaller tolerance.
pub fn alpha_curve(
    spec: &ModelSpec,
    xi_grid: &[f64],
    opts: &AlphaOptions,
    samples: u64,
    cfg: &McConfig,
) -> AlphaCurve {
    let sample = ColumnSample::for_spec(spec, samples, cfg);
    let xi1 = solve_xi1_on(&sample, &Xi1Options::default()).ok();
    let mut grid = xi_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut refined: Option<ColumnSample> = None;
    let fine = AlphaOptions { tol_root: opts.tol_root / 10.0, ..*opts };
    let points: Vec<AlphaSolve> = grid
        .iter()
        .map(|&xi| match &xi1 {
            Some(x) if (xi - x.xi1).abs() <= 0.05 * x.xi1 => {
                let r = refined.get_or_insert_with(|| ColumnSample::for_spec(spec, 4 * samples, &cfg.derive(1)));
                solve_alpha_on(r, xi, &fine)
            }
            _ => solve_alpha_on(&sample, xi, opts),
        })
        .collect();
    let monotonicity = monotonicity(&points);
    AlphaCurve { points, xi1, monotonicity }
}

fn monotonicity(points: &[AlphaSolve]) -> MonotonicityReport {
    // alpha is only defined where gamma < 0
    let kept: Vec<usize> = (0..points.len()).filter(|&i| points[i].status != AlphaStatus::GammaNonNegative).collect();
    let alphas: Vec<f64> = kept.iter().map(|&i| points[i].alpha_or_inf()).collect();
    let mut violations = Vec::new();
    let mut resolved = 0;
    for k in 0..alphas.len().saturating_sub(1) {
        let (a, b) = (alphas[k], alphas[k + 1]);
        if !(a > b) {
            violations.push(kept[k]);
        } else {
            let se = points[kept[k]].stderr_alpha.hypot(points[kept[k + 1]].stderr_alpha);
            if a - b > se || a.is_infinite() {
                resolved += 1;
            }
        }
    }
    let first_is_max = alphas.first().is_some_and(|&a0| alphas.iter().all(|&a| !(a > a0)));
    MonotonicityReport {
        strictly_decreasing: violations.is_empty(),
        resolved_pairs: resolved,
        pairs: alphas.len().saturating_sub(1),
        violations,
        first_is_max,
    }
}

/// Parameter swept along the first axis of a contour grid.
#[derive(Clone, Debug, PartialEq)]
pub enum ContourParam {
    BatchSize(Vec<usize>),
    StepSize(Vec<f64>),
}

impl ContourParam {
    pub fn name(&self) -> &'static str {
        match self {
            ContourParam::BatchSize(_) => "b",
            ContourParam::StepSize(_) => "eta",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            ContourParam::BatchSize(v) => v.iter().map(|&b| b as f64).collect(),
            ContourParam::StepSize(v) => v.clone(),
        }
    }
}

/// Grid of `h(xi, s)` over `(parameter, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourGrid {
    pub param_name: &'static str,
    pub param_values: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// Raw values, `values[i][j] = h` at `(param_values[i], s_grid[j])`;
    /// NaN marks a failed cell.
    pub values: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    /// Level-1 isocontour in `(parameter, s)` coordinates.
    pub contour: Vec<Polyline>,
}

impl ContourGrid {
    /// Values clipped at `level`, as drawn.
    pub fn clipped(&self, level: f64) -> Vec<Vec<f64>> {
        self.values.iter().map(|row| row.iter().map(|&v| v.min(level)).collect()).collect()
    }

    /// Longest contour polyline.
    pub fn main_contour(&self) -> Option<&Polyline> {
        self.contour.iter().max_by_key(|p| p.len())
    }
}

/// `h` over `param x s_grid`. For a batch-size sweep every `b` gets its own
/// sample (the law of `H` depends on `b`); a step-size sweep shares one.
pub fn contour_grid(
    spec: &ModelSpec,
    param: &ContourParam,
    s_grid: &[f64],
    samples: u64,
    cfg: &McConfig,
) -> Result<ContourGrid> {
    let row = |sample: &ColumnSample, xi: f64| -> (Vec<f64>, Vec<f64>) {
        s_grid
            .iter()
            .map(|&s| {
                let e = sample.h(xi, s);
                (e.mean, e.stderr)
            })
            .unzip()
    };
    let (values, stderr): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match param {
        ContourParam::BatchSize(bs) => bs
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let sb = spec.with_b(b)?;
                let sample = ColumnSample::for_spec(&sb, samples, &cfg.derive(i as u64));
                Ok(row(&sample, sb.xi()))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
        ContourParam::StepSize(etas) => {
            let sample = ColumnSample::for_spec(spec, samples, cfg);
            etas.iter().map(|&eta| row(&sample, eta / spec.b() as f64)).unzip()
        }
    };
    let param_values = param.values();
    let contour = marching_squares(&param_values, s_grid, &values, 1.0);
    Ok(ContourGrid { param_name: param.name(), param_values, s_grid: s_grid.to_vec(), values, stderr, contour })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::model::two_point_scalar;

    fn mixture_sample() -> ColumnSample {
        ColumnSample::exact(&two_point_scalar(0.5, 2.5, 1.0).unwrap(), 16).unwrap()
    }

    #[test]
    fn exact_mixture_roots() {
        let sample = mixture_sample();
        let a = solve_alpha_on(&sample, 1.0, &AlphaOptions::default());
        assert_eq!(a.status, AlphaStatus::Converged);
        assert!((a.alpha - 1.0).abs() < 1e-3);
        assert!(a.residual.abs() <= 1e-3);
        assert!(a.bracket.0 <= a.alpha && a.alpha <= a.bracket.1);
        let x = solve_xi1_on(&sample, &Xi1Options::default()).unwrap();
        assert!((x.xi1 - 1.0).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn uniqueness_audit() {
        let sample = mixture_sample();
        for xi in [0.9, 1.0, 1.1, 1.5] {
            let a = solve_alpha_on(&sample, xi, &AlphaOptions::default());
            assert!(a.is_converged());
            assert!(sample.h_value(xi, a.alpha / 2.0) < 1.0);
            assert!(sample.h_value(xi, (1.5 * a.alpha).min(S_MAX)) > 1.0);
        }
    }

    #[test]
    fn bounded_contraction_has_no_root() {
        // xi = 0.5: |A| in {0.75, 0.25}
        let a = solve_alpha_on(&mixture_sample(), 0.5, &AlphaOptions::default());
        assert_eq!(a.status, AlphaStatus::NoRootBelowSMax);
    }

    #[test]
    fn deterministic_contraction_has_no_root() {
        let spec = ModelSpec::deterministic(Mat::identity(1), vec![1.0], 1, 0.5).unwrap();
        let a = solve_alpha(&spec, &AlphaOptions::default(), 10, &McConfig::new(0));
        assert_eq!(a.status, AlphaStatus::NoRootBelowSMax);
        assert!(a.alpha_or_inf().is_infinite());
    }

    #[test]
    fn expanding_model_reports_nonnegative_gamma() {
        let spec = ModelSpec::deterministic(Mat::scalar(1, -1.0), vec![1.0], 1, 0.5).unwrap();
        let a = solve_alpha(&spec, &AlphaOptions::default(), 10, &McConfig::new(0));
        assert_eq!(a.status, AlphaStatus::GammaNonNegative);
    }

    #[test]
    fn deterministic_scalar_xi1() {
        for c in [0.5, 2.0, 3.0] {
            let spec = ModelSpec::deterministic(Mat::scalar(1, c), vec![1.0], 1, 0.1).unwrap();
            let x = solve_xi1(&spec, &Xi1Options::default(), 0, &McConfig::new(0)).unwrap();
            assert!((x.xi1 - 2.0 / c).abs() < 1e-8 * (2.0 / c));
        }
    }

    #[test]
    fn mixture_alpha_curve() {
        let spec = two_point_scalar(0.5, 2.5, 1.0).unwrap();
        let curve = alpha_curve(&spec, &[0.9, 0.5, 0.99, 1.0, 1.1], &AlphaOptions::default(), 0, &McConfig::new(0));
        let alphas: Vec<f64> = curve.points.iter().map(|p| p.alpha).collect();
        assert!(curve.monotonicity.strictly_decreasing, "{alphas:?}");
        assert!(curve.monotonicity.first_is_max);
        assert!(alphas[2] > 1.0 && (alphas[3] - 1.0).abs() < 1e-4 && alphas[4] < 1.0);
    }

    #[test]
    fn contour_zero_step_row_is_exact_ones() {
        let spec = ModelSpec::rank1_gauss(2, 5, 0.5).unwrap();
        let grid = contour_grid(&spec, &ContourParam::StepSize(vec![0.0, 0.5]), &[0.5, 1.0, 2.0], 1000, &McConfig::new(1)).unwrap();
        assert!(grid.values[0].iter().all(|&v| v == 1.0));
        assert!(grid.stderr[0].iter().all(|&v| v == 0.0));
    }
}
