//! Seed derivation for nested deterministic randomness.
//!
//! Every parallel unit (walk, trial, tree) gets its own generator seeded
//! from (master, salts...), so results do not depend on scheduling and
//! unrelated units cannot perturb each other.

/// SplitMix64 finalizer; bijective with good avalanche.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a salt path.
pub fn derive_seed(master: u64, salts: &[u64]) -> u64 {
    let mut acc = splitmix64(master);
    for &s in salts {
        acc = splitmix64(acc ^ splitmix64(s));
    }
    acc
}
