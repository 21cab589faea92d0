//! Chunked, order-stable Monte Carlo reduction.

use rayon::prelude::*;

use crate::rng::{stream, Stream};

/// Draws per chunk. Fixed so that results depend only on the seed.
pub const CHUNK: usize = 4096;

/// Runs `body(count, rng)` on consecutive chunks of `n` draws in parallel;
/// chunk `k` owns stream `k` of `seed`. Outputs come back in chunk order.
pub fn chunks<A, F>(n: usize, seed: u64, body: F) -> Vec<A>
where
    A: Send,
    F: Fn(usize, &mut Stream) -> A + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let count = CHUNK.min(n - k * CHUNK);
            let mut rng = stream(seed, k as u64);
            body(count, &mut rng)
        })
        .collect()
}

/// Running mean and sum of squared deviations (Welford), mergeable.
#[derive(Clone, Copy, Debug, Default)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}
