//! Seeding. Every stochastic routine takes a caller-provided generator; these
//! helpers give the canonical one and derive independent ensemble streams.

use rand::SeedableRng;

/// Generator used throughout the crate.
pub type SrmRng = rand_xoshiro::Xoshiro256PlusPlus;

/// Creates the canonical generator for `seed`.
pub fn rng_from_seed(seed: u64) -> SrmRng {
    SrmRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of ensemble member `k` for a master seed.
///
/// `splitmix64(splitmix64(master) ^ splitmix64(k + 1))`. Both halves are
/// bijections of their input, so for a fixed master distinct members get
/// distinct seeds.
pub fn derive_seed(master: u64, member: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(member.wrapping_add(1)))
}
