//! Streaming moments, Monte Carlo estimates and the deterministic parallel
//! driver shared by every stochastic routine.
//!
//! Work is cut into fixed-size chunks; chunk `c` of an estimator draws from
//! the stream `(seed, tag << 40 | c)`. Chunks run on a rayon pool of the
//! requested size and their partial results are merged in chunk order, so
//! the output depends on `(seed, samples)` only, never on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geomlin::RngStream;

/// Samples per chunk.
pub const CHUNK_SIZE: u64 = 1 << 14;

/// Count, mean and sum of squared deviations (Welford), mergeable by Chan's rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamingStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl StreamingStats {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &StreamingStats) -> StreamingStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        StreamingStats {
            count: n,
            mean: self.mean + delta * nb / n as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n as f64,
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for StreamingStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = StreamingStats::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// A Monte Carlo (or derived) estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Draws attempted, including the degenerate ones.
    pub n_samples: u64,
    pub seed: u64,
    pub method: String,
    /// Draws excluded from the mean because they hit a measure-zero event
    /// numerically.
    pub degenerate_count: u64,
}

impl Estimate {
    pub fn from_stats(stats: &StreamingStats, degenerate: u64, seed: u64, method: &str) -> Self {
        Estimate {
            value: stats.mean,
            stderr: stats.stderr(),
            n_samples: stats.count + degenerate,
            seed,
            method: method.to_string(),
            degenerate_count: degenerate,
        }
    }

    /// 95% normal-theory confidence interval.
    pub fn ci95(&self) -> (f64, f64) {
        (self.value - 1.96 * self.stderr, self.value + 1.96 * self.stderr)
    }

    /// The estimate multiplied by a constant (value and standard error).
    pub fn scaled(&self, c: f64) -> Estimate {
        Estimate {
            value: self.value * c,
            stderr: self.stderr * c.abs(),
            ..self.clone()
        }
    }

    /// `|self − target| ≤ z · stderr`.
    pub fn within_sigma(&self, target: f64, z: f64) -> bool {
        (self.value - target).abs() <= z * self.stderr
    }
}

/// Seed and worker count for a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(seed: u64, workers: usize) -> Self {
        McConfig {
            seed,
            workers: workers.max(1),
        }
    }
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig::new(DEFAULT_SEED, 1)
    }
}

/// Seed used whenever the caller does not pick one.
pub const DEFAULT_SEED: u64 = 20_190_517;

/// Stream tags keeping the random streams of different estimators apart.
pub(crate) mod tags {
    pub const GK: u64 = 1;
    pub const VITALE_C: u64 = 2;
    pub const VITALE_DET: u64 = 3;
    pub const ALPHA: u64 = 4;
    pub const ALPHA_C: u64 = 5;
    pub const EDEG24: u64 = 6;
    pub const SCHUBERT: u64 = 7;
    pub const DENSITY: u64 = 8;
    pub const INTEGRATION: u64 = 9;
    pub const TRANSVERSAL: u64 = 10;
    pub const RIG: u64 = 11;
    pub const RADIAL_BANK: u64 = 12;
    pub const VITALE_LINE: u64 = 13;
}

pub(crate) fn stream_for(seed: u64, tag: u64, chunk: u64) -> RngStream {
    RngStream::new(seed, (tag << 40) | chunk)
}

/// Splits `samples` into chunks, runs `step` once per sample inside each
/// chunk's accumulator, and folds the chunk accumulators in order.
pub fn par_chunks<T, I, S, M>(
    cfg: McConfig,
    tag: u64,
    samples: u64,
    init: I,
    step: S,
    merge: M,
) -> Result<T>
where
    T: Send,
    I: Fn() -> T + Sync,
    S: Fn(&mut RngStream, &mut T) + Sync,
    M: Fn(T, T) -> T,
{
    if samples == 0 {
        return Err(Error::Domain {
            func: "monte carlo",
            msg: "sample budget must be positive".into(),
        });
    }
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let run_chunk = |c: u64| {
        let mut rng = stream_for(cfg.seed, tag, c);
        let mut acc = init();
        let n = CHUNK_SIZE.min(samples - c * CHUNK_SIZE);
        for _ in 0..n {
            step(&mut rng, &mut acc);
        }
        acc
    };
    let parts: Vec<T> = if cfg.workers <= 1 {
        (0..chunks).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
        pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect())
    };
    let mut it = parts.into_iter();
    let first = it.next().expect("at least one chunk");
    Ok(it.fold(first, merge))
}

/// Accumulator for scalar estimators with degeneracy counting.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarAcc {
    pub stats: StreamingStats,
    pub degenerate: u64,
}

impl ScalarAcc {
    #[inline]
    pub fn record(&mut self, x: Option<f64>) {
        match x {
            Some(v) => self.stats.push(v),
            None => self.degenerate += 1,
        }
    }

    pub fn merge(self, other: ScalarAcc) -> ScalarAcc {
        ScalarAcc {
            stats: self.stats.merge(&other.stats),
            degenerate: self.degenerate + other.degenerate,
        }
    }
}

/// Mean of `draw` over `samples` i.i.d. draws; `None` marks a degenerate draw.
pub fn mc_mean<F>(cfg: McConfig, tag: u64, samples: u64, method: &str, draw: F) -> Result<Estimate>
where
    F: Fn(&mut RngStream) -> Option<f64> + Sync,
{
    let acc = par_chunks(
        cfg,
        tag,
        samples,
        ScalarAcc::default,
        |rng, acc| acc.record(draw(rng)),
        ScalarAcc::merge,
    )?;
    if acc.stats.count == 0 {
        return Err(Error::Numerical(format!(
            "all {samples} draws were degenerate"
        )));
    }
    Ok(Estimate::from_stats(&acc.stats, acc.degenerate, cfg.seed, method))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1 + 1e6).collect();
        let s: StreamingStats = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((s.mean - mean).abs() < 1e-9);
        assert!((s.variance() - var).abs() < 1e-9 * var);
    }

    #[test]
    fn zero_budget_rejected() {
        let r = mc_mean(McConfig::default(), 0, 0, "x", |r| Some(r.uniform()));
        assert!(r.is_err());
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let n = 3 * CHUNK_SIZE + 17;
        let a = mc_mean(McConfig::new(3, 1), 1, n, "u", |r| Some(r.normal())).unwrap();
        let b = mc_mean(McConfig::new(3, 4), 1, n, "u", |r| Some(r.normal())).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_samples, n);
    }

    #[test]
    fn degenerate_draws_are_counted() {
        let e = mc_mean(McConfig::new(1, 1), 2, 1000, "d", |r| {
            let u = r.uniform();
            (u > 0.1).then_some(u)
        })
        .unwrap();
        assert_eq!(e.n_samples, 1000);
        assert!(e.degenerate_count > 50 && e.degenerate_count < 150);
    }

    proptest! {
        #[test]
        fn merge_is_associative_and_order_free(
            xs in proptest::collection::vec(-1e3f64..1e3, 1..200),
            cut1 in 0usize..200,
            cut2 in 0usize..200,
        ) {
            let n = xs.len();
            let (a, b) = (cut1.min(n), cut2.min(n));
            let (lo, hi) = (a.min(b), a.max(b));
            let whole: StreamingStats = xs.iter().copied().collect();
            let p: StreamingStats = xs[..lo].iter().copied().collect();
            let q: StreamingStats = xs[lo..hi].iter().copied().collect();
            let r: StreamingStats = xs[hi..].iter().copied().collect();
            let left = p.merge(&q).merge(&r);
            let right = r.merge(&p.merge(&q));
            for m in [left, right] {
                prop_assert_eq!(m.count, whole.count);
                prop_assert!((m.mean - whole.mean).abs() <= 1e-10 * (1.0 + whole.mean.abs()));
                prop_assert!((m.m2 - whole.m2).abs() <= 1e-10 * (1.0 + whole.m2.abs()));
            }
        }
    }
}
