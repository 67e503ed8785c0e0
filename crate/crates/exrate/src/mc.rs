//! Deterministic, shardable Monte Carlo plumbing.
//!
//! Sample streams are generated in fixed-size blocks; block `j` of a run
//! seeded with `seed` always draws from the same ChaCha stream regardless of
//! how blocks are distributed over threads. Per-block partial results are
//! reduced in block order, so every estimate is a pure function of
//! `(seed, n)` — independent of the degree of parallelism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Samples per RNG block. Fixed: changing it changes every MC result.
pub const BLOCK: usize = 1 << 13;

/// RNG for block `block` of the stream identified by `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// A uniform draw on the open interval (0, 1).
///
/// Safe to feed to inverse CDFs that diverge at 0 and 1.
pub fn next_open01(rng: &mut ChaCha12Rng) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Splits `n` into `(block_index, samples_in_block)` pairs.
pub fn blocks(n: usize) -> Vec<(u64, usize)> {
    let mut out = Vec::with_capacity(n.div_ceil(BLOCK));
    let mut remaining = n;
    let mut idx = 0u64;
    while remaining > 0 {
        let take = remaining.min(BLOCK);
        out.push((idx, take));
        remaining -= take;
        idx += 1;
    }
    out
}

/// Maps every block in parallel and reduces the per-block results in block
/// order with `fold`.
pub fn map_reduce_blocks<T, F, G>(seed: u64, n: usize, map: F, fold: G) -> T
where
    T: Default + Send,
    F: Fn(&mut ChaCha12Rng, usize) -> T + Sync,
    G: Fn(T, T) -> T,
{
    let parts: Vec<T> = blocks(n)
        .into_par_iter()
        .map(|(idx, count)| {
            let mut rng = block_rng(seed, idx);
            map(&mut rng, count)
        })
        .collect();
    parts.into_iter().fold(T::default(), fold)
}

/// Streaming mean/variance accumulator (Welford), mergeable across blocks.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan's parallel combination; deterministic for a fixed merge order.
    pub fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * (other.n as f64 / n as f64);
        let m2 =
            self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64 / n as f64);
        Self { n, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.sample_variance() / self.n as f64).sqrt()
        }
    }
}

/// SplitMix64 finalizer; used to derive per-row seeds from a base seed.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
