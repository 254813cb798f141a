//! Seeded random stream shared by augmentations, initializers and shuffling.
//!
//! Backed by ChaCha8, whose output is defined independently of platform
//! endianness and word size, so a seed reproduces the same draws everywhere.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    position: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            position: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of draws taken so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Derive an independent child stream. The parent advances by one draw.
    pub fn fork(&mut self, tag: u64) -> RandomStream {
        let base = self.next_u64();
        RandomStream::new(base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.position += 1;
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.position += 1;
        self.rng.random::<f64>()
    }

    /// Uniform in `[lo, hi]`; returns `lo` when the interval is degenerate.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            self.position += 1;
            let _ = self.rng.next_u64();
            return lo;
        }
        lo + (hi - lo) * self.unit()
    }

    /// Uniform integer in the inclusive range `[lo, hi]`.
    pub fn int_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        self.position += 1;
        if hi <= lo {
            let _ = self.rng.next_u64();
            return lo;
        }
        self.rng.random_range(lo..=hi)
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.int_inclusive(0, n - 1)
    }

    pub fn normal(&mut self) -> f64 {
        self.position += 1;
        StandardNormal.sample(&mut self.rng)
    }

    /// Fisher-Yates shuffle driven by this stream.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.int_inclusive(0, i);
            items.swap(i, j);
        }
    }

    /// `count` distinct indices from `[0, n)`, in draw order.
    pub fn choose_distinct(&mut self, n: usize, count: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..n).collect();
        let count = count.min(n);
        for i in 0..count {
            let j = self.int_inclusive(i, n - 1);
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    }
}
