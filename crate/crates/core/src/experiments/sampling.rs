//! Deterministic composition sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform samples on the (n-1)-simplex: independent unit exponentials,
/// normalized (flat Dirichlet). Deterministic for a given seed.
pub fn sample_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        // u in [0, 1); 1 - u in (0, 1] keeps the logarithm finite
        let u: f64 = rng.gen();
        draws.push(-(1.0 - u).ln());
    }
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| d / total).collect()
}

/// A fresh deterministic generator for a scenario seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
