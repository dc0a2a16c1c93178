//! Seeded, counter-based random streams.
//!
//! Every Monte-Carlo computation splits its sample budget into fixed-size
//! batches; batch `k` draws from ChaCha stream `k` of the run seed. The
//! estimate therefore does not depend on how batches are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of samples per Monte-Carlo batch.
pub const BATCH: usize = 8192;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Split `total` samples into `(batch index, batch size)` pairs.
pub fn batches(total: usize) -> Vec<(u64, usize)> {
    let mut out = Vec::with_capacity(total.div_ceil(BATCH));
    let mut left = total;
    let mut k = 0u64;
    while left > 0 {
        let m = left.min(BATCH);
        out.push((k, m));
        left -= m;
        k += 1;
    }
    out
}
