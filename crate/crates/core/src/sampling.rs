//! Seeded pseudorandom sampling. Each consumer draws from its own stream
//! derived from `(seed, stream, index)`, so results do not depend on the
//! order in which sample points are processed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// Independent generator for one (stream, index) slot.
pub fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) << 20);
    rng
}

/// Uniform points in the box `ranges`.
pub fn uniform_points(ranges: &[(f64, f64)], count: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let mut rng = rng_for(seed, stream, i as u64);
            ranges
                .iter()
                .map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..hi) })
                .collect()
        })
        .collect()
}

/// Coefficient vector with entries in [-1, 1], never all zero.
pub fn random_coefficients<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let c: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if c.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
            return c;
        }
    }
}
