//! Seeded input lists.
//!
//! Values come from ChaCha8 seeded with `seed_from_u64`, which is specified
//! bit-for-bit, so the same `(n, seed)` yields the same list everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Element;

/// `n` uniform 64-bit integers.
pub fn gen_data(n: usize, seed: u64) -> Vec<Element> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// `n` integers uniform in `0..bound`, for inputs with many duplicates.
pub fn gen_bounded(n: usize, seed: u64, bound: Element) -> Vec<Element> {
    assert!(bound > 0, "bound must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..bound)).collect()
}
