//! Products `Pi_n = A_1 ... A_n`, partial sums `R_n = sum_{k<=n} Pi_{k-1} B_k`
//! and forward iterates `X_n = A_n X_{n-1} + B_n`.
//!
//! Products are accumulated as `Pi_n = Pi_{n-1} A_n` and stored in log-scaled
//! form `exp(lambda) * P` so that long heavy-tailed runs neither overflow nor
//! underflow.

use rand::Rng;

use crate::error::{config, Result};
use crate::linalg::{norm, Mat};
use crate::mc::{parallel_collect, parallel_fold, parallel_means, McConfig, McEstimate};
use crate::model::{CoefficientPair, ModelSpec};

const RESCALE_HI: f64 = 1e300;
const RESCALE_LO: f64 = 1e-300;

/// Matrix product kept as `exp(log_scale) * p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledProduct {
    p: Mat,
    log_scale: f64,
    scratch: Mat,
}

impl ScaledProduct {
    pub fn identity(d: usize) -> Self {
        ScaledProduct { p: Mat::identity(d), log_scale: 0.0, scratch: Mat::zeros(d) }
    }

    pub fn reset(&mut self) {
        let d = self.p.dim();
        self.p = Mat::identity(d);
        self.log_scale = 0.0;
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    /// `Pi <- Pi * a`. Returns `false`, leaving the product untouched, if the
    /// result would not be finite.
    pub fn try_mul_right(&mut self, a: &Mat) -> bool {
        let (mp, ma) = (self.p.max_abs(), a.max_abs());
        let moderate = |m: f64| m > 1e-140 && m < 1e140;
        if !(moderate(mp) && moderate(ma)) {
            let log_bound = mp.ln() + ma.ln() + (self.p.dim() as f64).ln();
            if log_bound > RESCALE_HI.ln() || (log_bound < RESCALE_LO.ln() && log_bound > f64::NEG_INFINITY) {
                self.normalize();
            }
        }
        self.p.mul_into(a, &mut self.scratch);
        if !self.scratch.is_finite() {
            return false;
        }
        std::mem::swap(&mut self.p, &mut self.scratch);
        let m = self.p.max_abs();
        if m > RESCALE_HI || (m < RESCALE_LO && m > 0.0) {
            self.normalize();
        }
        true
    }

    fn normalize(&mut self) {
        let n = self.p.operator_norm();
        if n > 0.0 && n.is_finite() {
            self.p.scale_in_place(1.0 / n);
            self.log_scale += n.ln();
        }
    }

    /// `log ||Pi||` in the operator norm; `-inf` for the zero matrix.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.p.operator_norm().ln()
    }

    /// `log` of the Frobenius norm, an upper bound for [`log_norm`](Self::log_norm).
    pub fn log_frobenius(&self) -> f64 {
        self.log_scale + self.p.frobenius().ln()
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Unscaled factor `P`.
    pub fn factor(&self) -> &Mat {
        &self.p
    }

    /// The product itself; may overflow to infinity.
    pub fn to_mat(&self) -> Mat {
        let mut m = self.p.clone();
        m.scale_in_place(self.log_scale.exp());
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Running,
    /// A non-finite value appeared; the trajectory is frozen at its last
    /// finite state.
    Diverged,
}

/// State of one run of the recursion.
#[derive(Clone, Debug)]
pub struct Trajectory {
    n: u64,
    prod: ScaledProduct,
    r: Vec<f64>,
    x: Option<Vec<f64>>,
    record_every: u64,
    log_norms: Vec<(u64, f64)>,
    status: TrajectoryStatus,
    buf: Vec<f64>,
    xbuf: Vec<f64>,
}

impl Trajectory {
    /// `Pi_0 = I`, `R_0 = 0`, no forward iterate.
    pub fn new(d: usize) -> Self {
        Trajectory {
            n: 0,
            prod: ScaledProduct::identity(d),
            r: vec![0.0; d],
            x: None,
            record_every: 0,
            log_norms: Vec::new(),
            status: TrajectoryStatus::Running,
            buf: vec![0.0; d],
            xbuf: vec![0.0; d],
        }
    }

    /// Also tracks `X_n` from the start `x0`.
    pub fn with_start(mut self, x0: Vec<f64>) -> Self {
        assert_eq!(x0.len(), self.r.len(), "start vector has the wrong dimension");
        self.x = Some(x0);
        self
    }

    /// Records `log ||Pi_k||` every `every` steps (including `k = 0`).
    pub fn recording(mut self, every: u64) -> Self {
        self.record_every = every;
        self.log_norms.clear();
        if every > 0 {
            self.log_norms.push((0, 0.0));
        }
        self
    }

    /// Back to `Pi_0 = I`, `R_0 = 0`; the forward iterate (if any) is zeroed.
    pub fn reset(&mut self) {
        self.n = 0;
        self.prod.reset();
        self.r.iter_mut().for_each(|v| *v = 0.0);
        if let Some(x) = self.x.as_mut() {
            x.iter_mut().for_each(|v| *v = 0.0);
        }
        self.log_norms.clear();
        if self.record_every > 0 {
            self.log_norms.push((0, 0.0));
        }
        self.status = TrajectoryStatus::Running;
    }

    /// One step with the pair `(A_n, B_n)`.
    pub fn advance(&mut self, pair: &CoefficientPair) -> TrajectoryStatus {
        if self.status == TrajectoryStatus::Diverged {
            return self.status;
        }
        let scale = self.prod.log_scale.exp();
        self.prod.p.mul_vec_into(&pair.b, &mut self.buf);
        for (t, r) in self.buf.iter_mut().zip(&self.r) {
            *t = r + scale * *t;
        }
        let mut finite = self.buf.iter().all(|v| v.is_finite());
        if let Some(x) = self.x.as_ref() {
            pair.a.mul_vec_into(x, &mut self.xbuf);
            for (t, b) in self.xbuf.iter_mut().zip(&pair.b) {
                *t += b;
            }
            finite &= self.xbuf.iter().all(|v| v.is_finite());
        }
        if !finite {
            self.status = TrajectoryStatus::Diverged;
            return self.status;
        }
        if !self.prod.try_mul_right(&pair.a) {
            self.status = TrajectoryStatus::Diverged;
            return self.status;
        }
        std::mem::swap(&mut self.r, &mut self.buf);
        if let Some(x) = self.x.as_mut() {
            std::mem::swap(x, &mut self.xbuf);
        }
        self.n += 1;
        if self.record_every > 0 && self.n % self.record_every == 0 {
            self.log_norms.push((self.n, self.prod.log_norm()));
        }
        self.status
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn x(&self) -> Option<&[f64]> {
        self.x.as_deref()
    }

    pub fn product(&self) -> &ScaledProduct {
        &self.prod
    }

    /// `Pi_n` as a plain matrix (may overflow; see [`product`](Self::product)).
    pub fn pi(&self) -> Mat {
        self.prod.to_mat()
    }

    pub fn log_norm_pi(&self) -> f64 {
        self.prod.log_norm()
    }

    /// Recorded `(k, log ||Pi_k||)` pairs.
    pub fn log_norms(&self) -> &[(u64, f64)] {
        &self.log_norms
    }

    pub fn status(&self) -> TrajectoryStatus {
        self.status
    }
}

/// Truncation rule for the series defining `R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub tol_prod: f64,
    pub n_max: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { tol_prod: 1e-12, n_max: 100_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    ProductBelowTol,
    MaxIterations,
    Diverged,
}

/// Truncated draw of `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct RSample {
    pub r: Vec<f64>,
    pub n: u64,
    pub reason: StopReason,
    /// `||Pi_n||` at the stopping index.
    pub prod_norm: f64,
    /// `sum_{k<=n} ||Pi_{k-1}||_F |B_k|`, the observed absolute series.
    pub abs_series: f64,
}

impl RSample {
    pub fn norm(&self) -> f64 {
        norm(&self.r)
    }

    /// Estimated bound on the truncation error `|R - R_n|`.
    ///
    /// The neglected tail is `Pi_n` times a fresh copy of the series, so the
    /// observed absolute series stands in for the unknown remainder.
    pub fn error_bound(&self) -> f64 {
        self.prod_norm * self.abs_series
    }

    /// `||Pi_n||` never fell below 1: `gamma >= 0` or `n_max` too small.
    pub fn non_contraction(&self) -> bool {
        self.reason == StopReason::MaxIterations && self.prod_norm >= 1.0
    }
}

/// Reusable buffers for repeated truncated draws of `R`.
#[derive(Clone, Debug)]
pub struct RSampler<'a> {
    spec: &'a ModelSpec,
    stop: StopRule,
    pair: CoefficientPair,
    traj: Trajectory,
}

impl<'a> RSampler<'a> {
    pub fn new(spec: &'a ModelSpec, stop: StopRule) -> Self {
        RSampler {
            spec,
            stop,
            pair: CoefficientPair::zeros(spec.d()),
            traj: Trajectory::new(spec.d()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> RSample {
        self.traj.reset();
        let log_tol = self.stop.tol_prod.ln();
        let log_sqrt_d = 0.5 * (self.spec.d() as f64).ln();
        let mut abs_series = 0.0;
        let reason = loop {
            if self.traj.n >= self.stop.n_max {
                break StopReason::MaxIterations;
            }
            let bound = self.traj.prod.log_frobenius().exp();
            self.spec.sample_into(rng, &mut self.pair);
            if self.traj.advance(&self.pair) == TrajectoryStatus::Diverged {
                break StopReason::Diverged;
            }
            abs_series += bound * norm(&self.pair.b);
            let lf = self.traj.prod.log_frobenius();
            if lf <= log_tol || (lf - log_sqrt_d <= log_tol && self.traj.prod.log_norm() <= log_tol) {
                break StopReason::ProductBelowTol;
            }
        };
        RSample {
            r: self.traj.r.clone(),
            n: self.traj.n,
            reason,
            prod_norm: self.traj.log_norm_pi().exp(),
            abs_series,
        }
    }

    /// Continues the last trajectory for `steps` more steps and returns the
    /// extended partial sum. Used to audit truncation errors.
    pub fn extend<R: Rng + ?Sized>(&mut self, rng: &mut R, steps: u64) -> &[f64] {
        for _ in 0..steps {
            self.spec.sample_into(rng, &mut self.pair);
            self.traj.advance(&self.pair);
        }
        &self.traj.r
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }
}

/// One truncated draw of `R`.
pub fn sample_r<R: Rng + ?Sized>(spec: &ModelSpec, stop: StopRule, rng: &mut R) -> RSample {
    RSampler::new(spec, stop).sample(rng)
}

/// `draws` independent truncated draws of `R`, in worker order.
pub fn sample_r_batch(spec: &ModelSpec, stop: StopRule, draws: u64, cfg: &McConfig) -> Vec<RSample> {
    parallel_fold(
        cfg,
        draws,
        || (RSampler::new(spec, stop), Vec::new()),
        |(sampler, out), rng| out.push(sampler.sample(rng)),
    )
    .into_iter()
    .flat_map(|(_, v)| v)
    .collect()
}

/// Runs `n` steps from `R_0 = 0` and returns `R_n`, or `None` on divergence.
pub fn partial_sum<R: Rng + ?Sized>(spec: &ModelSpec, n: u64, rng: &mut R) -> Option<Vec<f64>> {
    let mut traj = Trajectory::new(spec.d());
    let mut pair = CoefficientPair::zeros(spec.d());
    for _ in 0..n {
        spec.sample_into(rng, &mut pair);
        if traj.advance(&pair) == TrajectoryStatus::Diverged {
            return None;
        }
    }
    Some(traj.r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentPoint {
    pub n: u64,
    /// Estimate of `E|R_n|^alpha`.
    pub moment: McEstimate,
}

impl MomentPoint {
    /// `(1/n) E|R_n|^alpha` with its standard error.
    pub fn per_step(&self) -> (f64, f64) {
        let n = self.n as f64;
        (self.moment.mean / n, self.moment.stderr / n)
    }
}

/// `E|R_n|^alpha` for every `n` in the ascending `n_grid`, all read off the
/// same trajectories.
pub fn moment_growth_curve(
    spec: &ModelSpec,
    alpha: f64,
    n_grid: &[u64],
    samples: u64,
    cfg: &McConfig,
) -> Result<Vec<MomentPoint>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return config(format!("moment exponent must be positive, got {alpha}"));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
        return config("n_grid must be non-empty, positive and strictly increasing");
    }
    let d = spec.d();
    let estimates = parallel_means(cfg, samples, n_grid.len(), |rng, out| {
        let mut traj = Trajectory::new(d);
        let mut pair = CoefficientPair::zeros(d);
        let mut slot = 0;
        out.iter_mut().for_each(|v| *v = f64::NAN);
        for k in 1..=n_grid[n_grid.len() - 1] {
            spec.sample_into(rng, &mut pair);
            if traj.advance(&pair) == TrajectoryStatus::Diverged {
                return;
            }
            if k == n_grid[slot] {
                out[slot] = norm(traj.r()).powf(alpha);
                slot += 1;
            }
        }
    });
    Ok(n_grid.iter().zip(estimates).map(|(&n, moment)| MomentPoint { n, moment }).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailPoint {
    pub t: f64,
    /// Empirical `P(|R_n| > t)`.
    pub prob: f64,
    pub count: u64,
}

/// Empirical exceedance curve of `|R_n|` and its log-log slope on the top decade.
#[derive(Clone, Debug, PartialEq)]
pub struct TailBound {
    pub n: u64,
    pub points: Vec<TailPoint>,
    /// Weighted least-squares slope of `log P` against `log t` on the top
    /// decade, weights equal to the exceedance counts.
    pub slope: f64,
    pub decade: (f64, f64),
    /// Exceedances at the bottom of the top decade.
    pub top_decade_exceedances: u64,
    /// Fewer than 50 exceedances in the top decade.
    pub widened: bool,
    /// `-(alpha + epsilon)`.
    pub target_slope: f64,
}

impl TailBound {
    pub fn satisfies(&self, slack: f64) -> bool {
        self.slope <= self.target_slope + slack
    }
}

/// Empirical `P(|R_n| > t)` on `t_grid` (or an automatic log grid from the
/// median to the second-largest sample) and its top-decade slope.
pub fn finite_iteration_tail(
    spec: &ModelSpec,
    alpha: f64,
    epsilon: f64,
    n: u64,
    t_grid: Option<&[f64]>,
    samples: u64,
    cfg: &McConfig,
) -> Result<TailBound> {
    if samples < 2 {
        return config("finite_iteration_tail needs at least two samples");
    }
    let mut norms: Vec<f64> = parallel_collect(cfg, samples, |rng| {
        partial_sum(spec, n, rng).map_or(f64::INFINITY, |r| norm(&r))
    });
    norms.sort_by(f64::total_cmp);
    let grid = match t_grid {
        Some(g) => g.to_vec(),
        None => auto_grid(&norms, 40),
    };
    Ok(tail_from_sorted(&norms, &grid, n, -(alpha + epsilon)))
}

fn auto_grid(sorted: &[f64], points: usize) -> Vec<f64> {
    let lo = sorted[sorted.len() / 2];
    let hi = sorted[sorted.len() - 2];
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return vec![hi.max(lo)];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

fn tail_from_sorted(sorted: &[f64], grid: &[f64], n: u64, target_slope: f64) -> TailBound {
    let total = sorted.len() as f64;
    let points: Vec<TailPoint> = grid
        .iter()
        .map(|&t| {
            let count = (sorted.len() - sorted.partition_point(|&x| x <= t)) as u64;
            TailPoint { t, prob: count as f64 / total, count }
        })
        .collect();
    let positive: Vec<&TailPoint> = points.iter().filter(|p| p.count > 0 && p.t > 0.0).collect();
    let t_top = positive.iter().map(|p| p.t).fold(f64::NAN, f64::max);
    let decade = (t_top / 10.0, t_top);
    let in_decade: Vec<&&TailPoint> = positive.iter().filter(|p| p.t >= decade.0).collect();
    let top_decade_exceedances = in_decade.iter().map(|p| p.count).max().unwrap_or(0);
    let slope = weighted_slope(in_decade.iter().map(|p| (p.t.ln(), p.prob.ln(), p.count as f64)));
    TailBound {
        n,
        points,
        slope,
        decade,
        top_decade_exceedances,
        widened: top_decade_exceedances < 50,
        target_slope,
    }
}

fn weighted_slope(data: impl Iterator<Item = (f64, f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64, f64)> = data.collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    if pts.len() < 2 || sw == 0.0 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 { f64::NAN } else { sxy / sxx }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::two_point_scalar;
    use proptest::prelude::*;

    fn e1(d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        v
    }

    #[test]
    fn geometric_series() {
        let pair = CoefficientPair::fixed(Mat::scalar(2, 0.5), e1(2));
        let mut t = Trajectory::new(2);
        for _ in 0..3 {
            t.advance(&pair);
        }
        assert_eq!(t.r(), &[1.75, 0.0]);
        assert_eq!(t.n(), 3);
    }

    #[test]
    fn identity_accumulates_linearly() {
        let pair = CoefficientPair::fixed(Mat::identity(2), e1(2));
        let mut t = Trajectory::new(2).with_start(vec![0.0, 1.0]);
        for _ in 0..10 {
            t.advance(&pair);
        }
        assert_eq!(t.r(), &[10.0, 0.0]);
        assert_eq!(t.x().unwrap(), &[10.0, 1.0]);
    }

    #[test]
    fn brute_force_re_expansion() {
        let spec = ModelSpec::rank1_gauss(2, 8, 0.1).unwrap();
        let mut rng = McConfig::new(2024).stream(0);
        let pairs: Vec<_> = (0..50).map(|_| spec.sample_pair(&mut rng)).collect();
        let mut t = Trajectory::new(2).with_start(vec![0.3, -0.2]);
        for p in &pairs {
            t.advance(p);
        }
        let mut expected = vec![0.0; 2];
        for k in 0..50 {
            let mut pi = Mat::identity(2);
            for p in &pairs[..k] {
                pi = pi.mul(&p.a);
            }
            let term = pi.mul_vec(&pairs[k].b);
            expected[0] += term[0];
            expected[1] += term[1];
        }
        for i in 0..2 {
            assert!((t.r()[i] - expected[i]).abs() <= 1e-10 * norm(&expected));
        }
        let mut x = vec![0.3, -0.2];
        for p in &pairs {
            let ax = p.a.mul_vec(&x);
            x = vec![ax[0] + p.b[0], ax[1] + p.b[1]];
        }
        assert!((t.x().unwrap()[0] - x[0]).abs() < 1e-12 && (t.x().unwrap()[1] - x[1]).abs() < 1e-12);
    }

    #[test]
    fn log_domain_products() {
        let big = CoefficientPair::fixed(Mat::scalar(1, 1e200), vec![0.0]);
        let mut t = Trajectory::new(1);
        for _ in 0..3 {
            assert_eq!(t.advance(&big), TrajectoryStatus::Running);
        }
        let expected = 600.0 * 10f64.ln();
        assert!((t.log_norm_pi() - expected).abs() < 1e-9 * expected);

        let small = CoefficientPair::fixed(Mat::scalar(2, 1e-200), vec![0.0; 2]);
        let mut t = Trajectory::new(2);
        for _ in 0..100 {
            t.advance(&small);
        }
        let expected = -20_000.0 * 10f64.ln();
        assert!((t.log_norm_pi() - expected).abs() < 1e-9 * expected.abs());
    }

    #[test]
    fn overflow_freezes_trajectory() {
        let pair = CoefficientPair::fixed(Mat::scalar(1, 1e200), vec![1.0]);
        let mut t = Trajectory::new(1);
        let mut status = TrajectoryStatus::Running;
        for _ in 0..5 {
            status = t.advance(&pair);
        }
        assert_eq!(status, TrajectoryStatus::Diverged);
        assert!(t.r()[0].is_finite());
        assert_eq!(t.n(), 2);
    }

    #[test]
    fn sample_r_geometric() {
        let spec = ModelSpec::deterministic(Mat::identity(2), e1(2), 1, 0.5).unwrap();
        let s = sample_r(&spec, StopRule::default(), &mut McConfig::new(0).stream(0));
        assert_eq!(s.n, 40);
        assert_eq!(s.reason, StopReason::ProductBelowTol);
        assert!((s.r[0] - 2.0).abs() < 1e-11 && s.r[1] == 0.0);
        assert!(s.error_bound() >= (2.0 - s.r[0]).abs());
    }

    #[test]
    fn identity_is_non_contracting() {
        let spec = ModelSpec::deterministic(Mat::zeros(1), vec![1.0], 1, 1.0).unwrap();
        let s = sample_r(&spec, StopRule::default(), &mut McConfig::new(0).stream(0));
        assert_eq!(s.reason, StopReason::MaxIterations);
        assert!(s.non_contraction());
        assert_eq!(s.n, 100_000);
    }

    #[test]
    fn stationary_mean_is_zero() {
        let spec = ModelSpec::rank1_gauss(1, 1, 0.1).unwrap();
        let cfg = McConfig::new(11);
        let est = crate::mc::parallel_fold(
            &cfg,
            100_000,
            || (RSampler::new(&spec, StopRule::default()), crate::mc::MeanAccumulator::new()),
            |(s, acc), rng| acc.push(s.sample(rng).r[0]),
        );
        let mut acc = crate::mc::MeanAccumulator::new();
        for (_, a) in &est {
            acc.merge(a);
        }
        let est = acc.finish(&cfg);
        assert!(est.z_to(0.0) < 4.0, "{est:?}");
    }

    #[test]
    fn truncation_bound_holds_on_extension() {
        let spec = ModelSpec::rank1_gauss(2, 8, 0.3).unwrap();
        let mut rng = McConfig::new(5).stream(0);
        let mut sampler = RSampler::new(&spec, StopRule::default());
        for _ in 0..100 {
            let s = sampler.sample(&mut rng);
            let extended = sampler.extend(&mut rng, s.n).to_vec();
            let gap = norm(&[extended[0] - s.r[0], extended[1] - s.r[1]]);
            assert!(gap <= s.error_bound(), "gap {gap} bound {}", s.error_bound());
        }
    }

    #[test]
    fn moment_curve_controls() {
        let cfg = McConfig::new(1);
        let spec = ModelSpec::deterministic(Mat::identity(1), vec![1.0], 1, 0.5).unwrap();
        let curve = moment_growth_curve(&spec, 1.0, &[1, 2, 10], 50, &cfg).unwrap();
        for p in &curve {
            let exact = 2.0 - 2f64.powi(1 - p.n as i32);
            assert!((p.moment.mean - exact).abs() < 1e-14);
            assert_eq!(p.moment.stderr, 0.0);
        }
        let zero = ModelSpec::rank1_gauss(1, 1, 0.1).unwrap();
        let zero = ModelSpec::new(
            crate::model::ModelKind::Symm {
                h_law: crate::model::SymmLaw::Goe { mean: 1.0, scale: 1.0 },
                b_law: crate::model::BLaw::constant(vec![0.0]),
            },
            zero.d(),
            1,
            0.1,
        )
        .unwrap();
        for p in moment_growth_curve(&zero, 1.5, &[5, 50], 100, &cfg).unwrap() {
            assert_eq!(p.moment.mean, 0.0);
        }
        assert!(moment_growth_curve(&spec, 1.0, &[3, 2], 10, &cfg).is_err());
    }

    #[test]
    fn one_step_tail_has_bounded_support() {
        let spec = two_point_scalar(0.5, 2.5, 1.0).unwrap();
        let cfg = McConfig::new(3);
        let tb = finite_iteration_tail(&spec, 1.0, 0.5, 1, Some(&[0.0, 0.5, 1.0, 1.5, 10.0]), 1000, &cfg).unwrap();
        // R_1 = B_1 = 1
        assert_eq!(tb.points[0].prob, 1.0);
        assert_eq!(tb.points[1].prob, 1.0);
        assert_eq!(tb.points[2].prob, 0.0);
        assert_eq!(tb.points[4].prob, 0.0);
        let tb = finite_iteration_tail(&spec, 1.0, 0.5, 20, Some(&[1e-9]), 1000, &cfg).unwrap();
        assert_eq!(tb.points[0].prob, 1.0);
    }

    proptest! {
        #[test]
        fn recorded_norms_are_submultiplicative(seed in 0u64..1000, eta in 0.05f64..1.5) {
            let spec = ModelSpec::rank1_gauss(3, 2, eta).unwrap();
            let mut rng = McConfig::new(seed).stream(0);
            let mut t = Trajectory::new(3).recording(1);
            let mut norms_a = Vec::new();
            for _ in 0..30 {
                let p = spec.sample_pair(&mut rng);
                norms_a.push(p.a.operator_norm().ln());
                t.advance(&p);
            }
            let ln = t.log_norms();
            prop_assert_eq!(ln.len(), 31);
            for k in 1..ln.len() {
                prop_assert!(ln[k].1 <= ln[k - 1].1 + norms_a[k - 1] + 1e-10);
            }
        }
    }
}
