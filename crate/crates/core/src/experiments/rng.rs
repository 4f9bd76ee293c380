//! All randomness comes from ChaCha8 streams keyed by `(seed, stream)`, so
//! trials can run in any order and still reproduce bit for bit.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Recorded in result metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64 + set_stream";

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `k` distinct indices from `0..n`, uniformly.
pub fn support(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut idx = sample(rng, n, k.min(n)).into_vec();
    idx.sort_unstable();
    idx
}
