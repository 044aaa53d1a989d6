//! Reproducible random streams for parallel Monte-Carlo loops.
//!
//! Every simulation loop is cut into fixed blocks of [`BLOCK`] replicates.
//! Block `b` draws from ChaCha8 stream `b` keyed by the loop's seed, and the
//! replicates inside a block are consumed in order. Which worker runs which
//! block therefore never changes a single draw, so results are identical for
//! any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Replicates per random stream.
pub const BLOCK: usize = 256;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "RANKGAUGE_THREADS";

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `seed` and a tag.
pub fn derive(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Stream `index` of the generator keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Maps `f` over `count` replicates in parallel, returning results in
/// replicate order. `f` receives the block's generator and the replicate index.
pub fn map_replicates<T, F>(seed: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng, usize) -> T + Sync,
{
    let blocks = count.div_ceil(BLOCK);
    let per_block: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let start = b * BLOCK;
            let end = (start + BLOCK).min(count);
            (start..end).map(|r| f(&mut rng, r)).collect()
        })
        .collect();
    per_block.into_iter().flatten().collect()
}

/// Counts the replicates for which `f` returns true.
pub fn count_replicates<F>(seed: u64, count: usize, f: F) -> usize
where
    F: Fn(&mut StreamRng, usize) -> bool + Sync,
{
    let blocks = count.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let start = b * BLOCK;
            let end = (start + BLOCK).min(count);
            (start..end).filter(|&r| f(&mut rng, r)).count()
        })
        .sum()
}

/// Worker count requested through [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
}

/// Configures the global rayon pool from [`THREADS_ENV`]. Calling it more than
/// once, or after the pool has started, is harmless.
pub fn init_thread_pool() {
    if let Some(threads) = threads_from_env() {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}
