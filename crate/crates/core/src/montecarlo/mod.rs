//! Seeded, worker-count-independent Monte Carlo.
//!
//! Trials are grouped into fixed-size batches. Batch `b` draws from a
//! ChaCha8 keystream selected by `(seed, stream)` and positioned at word
//! offset `b << 40`, so every batch owns a disjoint block of the stream and
//! the result depends only on `(seed, stream, trials)`. Per-batch moments
//! are merged in batch order.

mod estimators;
mod hit_and_run;
mod reductions;
mod samplers;
mod volumes;

pub use estimators::*;
pub use hit_and_run::*;
pub use reductions::*;
pub use samplers::*;
pub use volumes::*;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{capacity, domain, Result};

/// Trials per batch; part of the reproducibility contract.
pub const BATCH_TRIALS: u64 = 8192;
const BATCH_WORD_SHIFT: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Generator for the whole substream, starting at its first word.
    pub fn rng(&self) -> ChaCha8Rng {
        self.batch_rng(0)
    }

    /// Generator positioned at the start of batch `batch`.
    pub fn batch_rng(&self, batch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos((batch as u128) << BATCH_WORD_SHIFT);
        rng
    }
}

/// Uniform on `[0, 1)` from the top 53 bits of one 64-bit draw.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard exponential by inversion, `-ln(1 - U)`.
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -(1.0 - unit_f64(rng)).ln()
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: RngSpec,
}

impl Estimate {
    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Running count, mean and centred second moment.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / total as f64;
        self.count = total;
    }

    fn estimate(&self, seed: RngSpec) -> Estimate {
        let var = if self.count > 1 { self.m2 / (self.count - 1) as f64 } else { 0.0 };
        Estimate {
            mean: self.mean,
            stderr: (var.max(0.0) / self.count as f64).sqrt(),
            samples: self.count,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub trials: u64,
    pub rng: RngSpec,
    pub workers: usize,
}

impl MonteCarlo {
    pub fn new(trials: u64, rng: RngSpec) -> Self {
        Self { trials, rng, workers: 1 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    /// Runs `trials` calls of `trial`, each filling one value per output,
    /// and returns one estimate per output.
    pub fn run<F>(&self, outputs: usize, trial: F) -> Result<Vec<Estimate>>
    where
        F: Fn(&mut ChaCha8Rng, &mut [f64]) -> Result<()> + Sync,
    {
        if self.trials < 2 {
            return domain("at least 2 trials are required for a standard error");
        }
        let batches = self.trials.div_ceil(BATCH_TRIALS);
        let run_batch = |b: u64| -> Result<Vec<Moments>> {
            let mut rng = self.rng.batch_rng(b);
            let count = BATCH_TRIALS.min(self.trials - b * BATCH_TRIALS);
            let mut moments = vec![Moments::default(); outputs];
            let mut values = vec![0.0; outputs];
            for _ in 0..count {
                trial(&mut rng, &mut values)?;
                moments.iter_mut().zip(&values).for_each(|(m, v)| m.push(*v));
            }
            Ok(moments)
        };
        let per_batch: Vec<Vec<Moments>> = if self.workers <= 1 || batches == 1 {
            (0..batches).map(run_batch).collect::<Result<_>>()?
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .map_err(|e| crate::error::Error::Capacity(format!("cannot start worker pool: {e}")))?;
            pool.install(|| (0..batches).into_par_iter().map(run_batch).collect::<Result<_>>())?
        };
        let mut total = vec![Moments::default(); outputs];
        for batch in &per_batch {
            total.iter_mut().zip(batch).for_each(|(t, m)| t.merge(m));
        }
        Ok(total.iter().map(|m| m.estimate(self.rng)).collect())
    }

    pub fn run_scalar<F>(&self, trial: F) -> Result<Estimate>
    where
        F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
    {
        let est = self.run(1, |rng, out| {
            out[0] = trial(rng)?;
            Ok(())
        })?;
        Ok(est[0])
    }
}

/// Draws until `accept` holds, failing after `cap` attempts.
pub(crate) fn rejection<T, R, D, A>(rng: &mut R, cap: u64, mut draw: D, accept: A) -> Result<T>
where
    R: RngCore + ?Sized,
    D: FnMut(&mut R) -> T,
    A: Fn(&T) -> bool,
{
    for _ in 0..cap {
        let x = draw(rng);
        if accept(&x) {
            return Ok(x);
        }
    }
    capacity(format!("rejection sampler exceeded {cap} attempts"))
}
