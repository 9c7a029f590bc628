//! Deterministic random streams.
//!
//! Every stochastic component draws from a PCG-64 (MCG) generator whose seed is
//! derived by hashing a tuple of integers with SplitMix64. Grid cells, trials,
//! and initializations therefore get independent, individually reproducible
//! streams: `stream(&[base_seed, n, d, kappa_index, trial_index])` is stable
//! across runs, platforms, and thread schedules.

use rand_pcg::Pcg64Mcg;

/// SplitMix64 finalizer; good avalanche, the usual seed-expansion choice.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapse a tuple of stream coordinates into one 64-bit seed.
pub fn stream_seed(parts: &[u64]) -> u64 {
    let mut acc = 0x853c_49e6_748f_ea9bu64;
    for &p in parts {
        acc = splitmix64(acc ^ p);
    }
    acc
}

/// Seeded generator for the stream identified by `parts`.
pub fn stream_rng(parts: &[u64]) -> Pcg64Mcg {
    use rand::SeedableRng;
    Pcg64Mcg::seed_from_u64(stream_seed(parts))
}
