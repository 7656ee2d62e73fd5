//! Seeded random streams.
//!
//! Every stochastic component draws from [`Xoshiro256PlusPlus`]. Generators
//! are created from a `u64` through `seed_from_u64`, which expands the seed
//! with SplitMix64. Sub-streams are derived by folding extra words into the
//! base seed with [`derive_seed`], so the stream used for (round 3, vehicle 7)
//! does not depend on how many numbers other streams consumed.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(splitmix64(base), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn stream(base: u64, words: &[u64]) -> Rng {
    rng_from_seed(derive_seed(base, words))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, &[1, 2]).random();
        let b: u64 = stream(7, &[1, 2]).random();
        let c: u64 = stream(7, &[2, 1]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
