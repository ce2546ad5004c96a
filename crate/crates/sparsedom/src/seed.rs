//! Per-trial seeding.
//!
//! Every trial draws from its own ChaCha8 stream whose seed mixes the master
//! seed, the suite name and the trial number. Trials are therefore
//! independent of scheduling order and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the bytes of `s`.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn trial_seed(master: u64, suite: &str, trial: u64) -> u64 {
    mix(mix(master ^ mix(fnv1a(suite))).wrapping_add(trial))
}

pub fn trial_rng(master: u64, suite: &str, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, suite, trial))
}
