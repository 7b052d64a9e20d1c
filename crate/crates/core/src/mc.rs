//! Reproducible parallel Monte-Carlo engine.
//!
//! Every random stream is a ChaCha8 generator keyed by the master seed and a
//! 64-bit stream id (`set_stream`), so substreams are counter-based and
//! disjoint. Draws are partitioned into contiguous blocks, one per worker, and
//! worker accumulators are merged in worker-index order. A run is therefore
//! bit-reproducible for a fixed `(seed, workers)` pair.
//!
//! Gaussian variates throughout the crate come from
//! `rand_distr::StandardNormal` (Ziggurat), so results depend on
//! `(seed, workers, generator, sampler)` and nothing else.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every substream.
pub type McRng = ChaCha8Rng;

/// Environment variable that overrides the default worker count.
pub const WORKERS_ENV: &str = "HEAVYTAIL_WORKERS";

/// Seed and worker count for one Monte-Carlo computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McConfig {
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    /// Uses `HEAVYTAIL_WORKERS` if set, else the available parallelism.
    pub fn new(seed: u64) -> Self {
        McConfig { seed, workers: default_workers() }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        McConfig { workers: workers.max(1), ..self }
    }

    /// Independent configuration for a sub-task, keyed by `key`.
    pub fn derive(&self, key: u64) -> Self {
        McConfig { seed: splitmix64(self.seed ^ splitmix64(key.wrapping_add(0x5851_f42d_4c95_7f2d))), ..*self }
    }

    /// The substream with the given id.
    pub fn stream(&self, id: u64) -> McRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }
}

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Reason a draw was excluded from an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SkipReason {
    NonFinite,
    Singular,
    ZeroNorm,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SkipReason::NonFinite => "non-finite",
            SkipReason::Singular => "singular",
            SkipReason::ZeroNorm => "zero-norm",
        })
    }
}

/// Monte-Carlo estimate of an expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub stderr: f64,
    pub n: u64,
    pub skipped: BTreeMap<SkipReason, u64>,
    pub seed: u64,
    pub workers: usize,
}

impl McEstimate {
    /// A value known without sampling error.
    pub fn exact(value: f64) -> Self {
        McEstimate { mean: value, stderr: 0.0, n: 0, skipped: BTreeMap::new(), seed: 0, workers: 0 }
    }

    pub fn skipped_total(&self) -> u64 {
        self.skipped.values().sum()
    }

    /// Draws requested: accepted plus skipped.
    pub fn requested(&self) -> u64 {
        self.n + self.skipped_total()
    }

    pub fn combined_stderr(&self, other: &McEstimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }

    /// `|a - b|` in units of the combined standard error.
    pub fn z_distance(&self, other: &McEstimate) -> f64 {
        let se = self.combined_stderr(other);
        let d = (self.mean - other.mean).abs();
        if se == 0.0 {
            if d == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            d / se
        }
    }

    /// |mean - value| / stderr
    pub fn z_to(&self, value: f64) -> f64 {
        self.z_distance(&McEstimate::exact(value))
    }
}

/// Running mean/variance (Welford) with skip bookkeeping.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeanAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
    skipped: BTreeMap<SkipReason, u64>,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one draw; non-finite values are tallied as skipped.
    #[inline]
    pub fn push(&mut self, x: f64) {
        if !x.is_finite() {
            self.skip(SkipReason::NonFinite);
            return;
        }
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn push_result(&mut self, x: Result<f64, SkipReason>) {
        match x {
            Ok(v) => self.push(v),
            Err(r) => self.skip(r),
        }
    }

    pub fn skip(&mut self, reason: SkipReason) {
        *self.skipped.entry(reason).or_insert(0) += 1;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Chan et al. parallel merge.
    pub fn merge(&mut self, other: &MeanAccumulator) {
        for (k, v) in &other.skipped {
            *self.skipped.entry(*k).or_insert(0) += v;
        }
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            self.n = other.n;
            self.mean = other.mean;
            self.m2 = other.m2;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        self.mean += delta * other.n as f64 / nf;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / nf;
        self.n = n;
    }

    pub fn finish(&self, cfg: &McConfig) -> McEstimate {
        let stderr = if self.n > 1 {
            (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean: if self.n > 0 { self.mean } else { f64::NAN },
            stderr,
            n: self.n,
            skipped: self.skipped.clone(),
            seed: cfg.seed,
            workers: cfg.workers,
        }
    }
}

/// Merges in index order by pairwise reduction.
fn merge_pairwise(mut parts: Vec<MeanAccumulator>) -> MeanAccumulator {
    if parts.is_empty() {
        return MeanAccumulator::new();
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.merge(&b);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Block of draws `[start, end)` owned by `worker`.
fn block(draws: u64, workers: usize, worker: usize) -> (u64, u64) {
    let w = workers as u128;
    let d = draws as u128;
    let start = d * worker as u128 / w;
    let end = d * (worker as u128 + 1) / w;
    (start as u64, end as u64)
}

/// Runs `step` once per draw with worker-owned state, returning one state per
/// worker in worker-index order.
pub fn parallel_fold<A, I, F>(cfg: &McConfig, draws: u64, init: I, step: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &mut McRng) + Sync,
{
    let workers = cfg.workers.max(1);
    let run = |w: usize| {
        let (start, end) = block(draws, workers, w);
        let mut rng = cfg.stream(w as u64);
        let mut acc = init();
        for _ in start..end {
            step(&mut acc, &mut rng);
        }
        acc
    };
    if workers == 1 {
        return vec![run(0)];
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers).map(|w| scope.spawn(move || run(w))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("monte-carlo worker panicked"))
            .collect()
    })
}

/// Monte-Carlo mean of a per-draw evaluator. Non-finite draws are skipped.
pub fn parallel_mean<F>(cfg: &McConfig, draws: u64, eval: F) -> McEstimate
where
    F: Fn(&mut McRng) -> f64 + Sync,
{
    parallel_mean_tagged(cfg, draws, |rng| Ok(eval(rng)))
}

/// Like [`parallel_mean`] for evaluators that can reject a draw with a reason.
pub fn parallel_mean_tagged<F>(cfg: &McConfig, draws: u64, eval: F) -> McEstimate
where
    F: Fn(&mut McRng) -> Result<f64, SkipReason> + Sync,
{
    let parts = parallel_fold(cfg, draws, MeanAccumulator::new, |acc, rng| acc.push_result(eval(rng)));
    merge_pairwise(parts).finish(cfg)
}

/// Means of a fixed-width vector evaluator, one estimate per slot.
pub fn parallel_means<F>(cfg: &McConfig, draws: u64, width: usize, eval: F) -> Vec<McEstimate>
where
    F: Fn(&mut McRng, &mut [f64]) + Sync,
{
    let parts = parallel_fold(
        cfg,
        draws,
        || (vec![MeanAccumulator::new(); width], vec![0.0; width]),
        |(accs, buf), rng| {
            eval(rng, buf);
            for (a, &x) in accs.iter_mut().zip(buf.iter()) {
                a.push(x);
            }
        },
    );
    let mut per_slot: Vec<Vec<MeanAccumulator>> = vec![Vec::with_capacity(parts.len()); width];
    for (accs, _) in parts {
        for (slot, a) in per_slot.iter_mut().zip(accs) {
            slot.push(a);
        }
    }
    per_slot.into_iter().map(|p| merge_pairwise(p).finish(cfg)).collect()
}

/// Collects one value per draw, concatenated in worker order.
pub fn parallel_collect<T, F>(cfg: &McConfig, draws: u64, eval: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut McRng) -> T + Sync,
{
    parallel_fold(cfg, draws, Vec::new, |v, rng| v.push(eval(rng)))
        .into_iter()
        .flatten()
        .collect()
}

/// Runs independent tasks, task `i` on its own substream `derive(i)`.
///
/// Output is independent of the worker count.
pub fn parallel_tasks<T, F>(cfg: &McConfig, tasks: usize, eval: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut McRng) -> T + Sync,
{
    let workers = cfg.workers.max(1).min(tasks.max(1));
    let run_task = |i: usize| {
        let mut rng = cfg.derive(i as u64).stream(0);
        eval(i, &mut rng)
    };
    if workers == 1 {
        return (0..tasks).map(run_task).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..tasks).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks {
                    break;
                }
                let out = run_task(i);
                slots.lock().expect("task slot lock poisoned")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("task slot lock poisoned")
        .into_iter()
        .map(|s| s.expect("task did not complete"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn constant_evaluator() {
        let cfg = McConfig::new(1).with_workers(3);
        let est = parallel_mean(&cfg, 100, |_| 7.0);
        assert_eq!(est.mean, 7.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.n, 100);
    }

    #[test]
    fn uniform_law_of_large_numbers() {
        let cfg = McConfig::new(9).with_workers(2);
        let est = parallel_mean(&cfg, 1_000_000, |rng| rng.random::<f64>());
        assert!(est.z_to(0.5) < 3.0, "{est:?}");
        let expected_se = (1.0f64 / 12.0).sqrt() / 1000.0;
        assert!((est.stderr / expected_se - 1.0).abs() < 0.01);
    }

    #[test]
    fn bitwise_reproducible() {
        let cfg = McConfig::new(42).with_workers(4);
        let f = |rng: &mut McRng| rng.random::<f64>().powi(3);
        let a = parallel_mean(&cfg, 10_001, f);
        let b = parallel_mean(&cfg, 10_001, f);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn worker_counts_agree_statistically() {
        let f = |rng: &mut McRng| rng.random::<f64>();
        let one = parallel_mean(&McConfig::new(5).with_workers(1), 200_000, f);
        let eight = parallel_mean(&McConfig::new(5).with_workers(8), 200_000, f);
        assert_ne!(one.mean.to_bits(), eight.mean.to_bits());
        assert!(one.z_distance(&eight) < 4.0);
    }

    #[test]
    fn nan_draws_are_skipped() {
        let cfg = McConfig::new(3).with_workers(2);
        let est = parallel_mean(&cfg, 1000, |rng| if rng.random::<f64>() < 0.1 { f64::NAN } else { 1.0 });
        assert_eq!(est.requested(), 1000);
        assert!(est.skipped[&SkipReason::NonFinite] > 50);
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn vector_means_and_collect() {
        let cfg = McConfig::new(11).with_workers(3);
        let m = parallel_means(&cfg, 1000, 2, |_, out| {
            out[0] = 1.0;
            out[1] = 2.0;
        });
        assert_eq!((m[0].mean, m[1].mean), (1.0, 2.0));
        let v = parallel_collect(&cfg, 17, |rng| rng.random::<u32>());
        assert_eq!(v.len(), 17);
        assert_eq!(v, parallel_collect(&cfg, 17, |rng| rng.random::<u32>()));
    }

    #[test]
    fn tasks_do_not_depend_on_worker_count() {
        let f = |i: usize, rng: &mut McRng| (i, rng.random::<u64>());
        let a = parallel_tasks(&McConfig::new(8).with_workers(1), 20, f);
        let b = parallel_tasks(&McConfig::new(8).with_workers(5), 20, f);
        assert_eq!(a, b);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() * 10.0 + 3.0).collect();
        let mut whole = MeanAccumulator::new();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = MeanAccumulator::new();
        let mut b = MeanAccumulator::new();
        xs[..300].iter().for_each(|&x| a.push(x));
        xs[300..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let cfg = McConfig::new(0).with_workers(1);
        let (e1, e2) = (whole.finish(&cfg), a.finish(&cfg));
        assert!((e1.mean - e2.mean).abs() < 1e-12);
        assert!((e1.stderr - e2.stderr).abs() < 1e-12);
    }
}
