//! Counter-based random streams and order-independent reductions.
//!
//! Every Monte Carlo estimate in this crate is split into fixed-size chunks.
//! Chunk `c` of a run with seed `s` draws from the ChaCha8 stream keyed by
//! `(s, c)`, and chunk statistics are merged by a pairwise tree in chunk-index
//! order. Results therefore depend only on `(seed, n_samples)` and never on how
//! rayon schedules the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per chunk. Changing this changes every seeded result.
pub const CHUNK_SIZE: usize = 8192;

/// Generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer applied to `seed ^ index`; used to derive per-instance seeds.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Streaming mean/variance (Welford), mergeable with Chan's update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Self {
            n,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * w,
        }
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Merge `items` with a balanced binary tree in index order.
pub fn pairwise_reduce<T, F>(items: &[T], merge: &F) -> Option<T>
where
    T: Clone,
    F: Fn(&T, &T) -> T,
{
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        len => {
            let (left, right) = items.split_at(len / 2);
            let l = pairwise_reduce(left, merge)?;
            let r = pairwise_reduce(right, merge)?;
            Some(merge(&l, &r))
        }
    }
}

/// Run `work(rng, count)` once per chunk of `n_samples` and return the chunk
/// results in chunk order.
pub fn map_chunks<T, F>(n_samples: usize, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let n_chunks = n_samples.div_ceil(CHUNK_SIZE);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK_SIZE.min(n_samples - c * CHUNK_SIZE);
            let mut rng = stream_rng(seed, c as u64);
            work(&mut rng, count)
        })
        .collect()
}

/// Element-wise merge of per-chunk statistic vectors.
pub fn reduce_stats(chunks: &[Vec<RunningStats>]) -> Vec<RunningStats> {
    pairwise_reduce(chunks, &|a: &Vec<RunningStats>, b: &Vec<RunningStats>| {
        a.iter().zip(b).map(|(x, y)| x.merge(y)).collect()
    })
    .unwrap_or_default()
}
