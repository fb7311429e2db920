use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::TimeGrid;

/// Source of Brownian increments, one `dim`-vector per step.
pub trait NoiseSource {
    /// Write the increment of step `k` (of length `dt`) into `out`.
    fn increment(&mut self, k: usize, dt: f64, out: &mut [f64]);
}

/// Lazily generated Gaussian increments: draws `N(0, 1)` in order and
/// scales by `√dt`.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        NoiseStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl NoiseSource for NoiseStream {
    #[inline]
    fn increment(&mut self, _k: usize, dt: f64, out: &mut [f64]) {
        let s = dt.sqrt();
        for o in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *o = s * z;
        }
    }
}

/// Materialised increments of a [`NoiseStream`] over a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRecord {
    pub seed: u64,
    dim: usize,
    /// Step-major: increment `k` occupies `k*dim .. (k+1)*dim`.
    increments: Vec<f64>,
}

impl NoiseRecord {
    pub fn generate(seed: u64, dim: usize, grid: &TimeGrid) -> Self {
        let n = grid.n_steps();
        let mut stream = NoiseStream::new(seed);
        let mut increments = vec![0.0; n * dim];
        for k in 0..n {
            stream.increment(k, grid.step(k), &mut increments[k * dim..(k + 1) * dim]);
        }
        NoiseRecord {
            seed,
            dim,
            increments,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len() / self.dim.max(1)
    }

    pub fn get(&self, k: usize) -> &[f64] {
        &self.increments[k * self.dim..(k + 1) * self.dim]
    }

    /// Component `i` of every increment, i.e. the increments of `w_i`.
    pub fn component(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.increments.chunks(self.dim).map(move |c| c[i])
    }

    pub fn replay(&self) -> Replay<'_> {
        Replay { record: self }
    }
}

/// Replays stored increments; the requested `dt` is ignored.
#[derive(Debug, Clone, Copy)]
pub struct Replay<'a> {
    record: &'a NoiseRecord,
}

impl NoiseSource for Replay<'_> {
    #[inline]
    fn increment(&mut self, k: usize, _dt: f64, out: &mut [f64]) {
        out.copy_from_slice(self.record.get(k));
    }
}
