//! Seeded workload generators shared by the benchmarks.

use mcrank_core::CandidateSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` candidates with `m` continuous criteria drawn uniformly from [1, 5].
pub fn continuous_candidates(n: usize, m: usize, seed: u64) -> CandidateSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CandidateSet::from_rows(
        "bench",
        (0..n).map(|i| {
            (
                format!("i{i:05}"),
                (0..m).map(|_| rng.gen_range(1.0..=5.0)).collect(),
            )
        }),
    )
    .expect("generated candidates are valid")
}

/// `n` candidates with `m` integer criteria in 1..=5, the heavily tied case.
pub fn integer_candidates(n: usize, m: usize, seed: u64) -> CandidateSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CandidateSet::from_rows(
        "bench",
        (0..n).map(|i| {
            (
                format!("i{i:05}"),
                (0..m).map(|_| rng.gen_range(1..=5) as f64).collect(),
            )
        }),
    )
    .expect("generated candidates are valid")
}
