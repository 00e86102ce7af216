//! Seeded randomness.
//!
//! Every stochastic step in this crate draws from a ChaCha8 stream seeded
//! through this module, so a run is reproducible bit-for-bit across
//! platforms. Normal deviates use the Box-Muller transform of two uniform
//! draws rather than a platform-tuned sampler, for the same reason.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream from a base seed, a purpose tag, and a
/// counter (splitmix64 finalization of the mixed words). Disjoint
/// (tag, counter) pairs give streams that never share ChaCha state.
pub fn derive_seed(base: u64, tag: u64, counter: u64) -> u64 {
    let mut z = base
        .wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(counter.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One standard-normal draw via Box-Muller. Consumes exactly two uniforms.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // u1 in (0, 1] so the log is finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
