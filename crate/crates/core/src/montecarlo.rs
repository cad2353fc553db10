//! Seeded, chunked Monte Carlo averages with standard errors.
//!
//! Samples are split into fixed-size chunks, each with its own stream seeded from
//! `(seed, chunk index)`. Chunk sums are reduced in chunk order, so results do not
//! depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{mix_seed, HaarSampler};

pub const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Sample standard error of the mean (0 for a single sample).
    pub std_error: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    fn estimate(self) -> MeanEstimate {
        let std_error = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        MeanEstimate {
            mean: self.mean,
            std_error,
            samples: self.n,
        }
    }
}

fn chunked<S>(samples: usize, make_state: S) -> MeanEstimate
where
    S: Fn(u64) -> Box<dyn FnMut() -> f64 + Send> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = CHUNK.min(samples - k * CHUNK);
            let mut next = make_state(k as u64);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(next());
            }
            m
        })
        .collect();
    parts
        .into_iter()
        .fold(Moments::default(), Moments::merge)
        .estimate()
}

/// Mean of `f(R)` over `samples` Haar rotations of SO(d); `f` receives the row-major matrix.
pub fn haar_mean<F>(samples: usize, seed: u64, d: usize, f: F) -> MeanEstimate
where
    F: Fn(&[f64]) -> f64 + Sync + Send + Clone + 'static,
{
    chunked(samples, move |k| {
        let mut sampler = HaarSampler::new(mix_seed(seed, k), d);
        let mut buf = vec![0.0; d * d];
        let f = f.clone();
        Box::new(move || {
            sampler.sample_into(&mut buf);
            f(&buf)
        })
    })
}

/// Mean of `f(rng)` over `samples` draws from per-chunk ChaCha streams.
pub fn rng_mean<F>(samples: usize, seed: u64, f: F) -> MeanEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send + Clone + 'static,
{
    chunked(samples, move |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, k));
        let f = f.clone();
        Box::new(move || f(&mut rng))
    })
}
