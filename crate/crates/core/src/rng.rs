//! Seed plumbing. Every stochastic routine takes a `u64` seed; sub-seeds
//! for frames and streams are derived by mixing, never from the clock.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used by every stochastic routine in the crate.
pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a path of indices, e.g.
/// `derive_seed(master, &[grid_point, frame, stream])`.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(parent), |acc, &i| {
        mix64(acc ^ mix64(i.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

/// Uniform random bits (0/1 bytes).
pub fn random_bits(n: usize, seed: u64) -> Vec<u8> {
    use rand::Rng;
    let mut rng = seeded(seed);
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}
