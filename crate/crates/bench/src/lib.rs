//! Input generators shared by the benchmarks.

use bbfnn_core::{BetaRanges, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform entries in [-1, 1).
pub fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Moderate ranges that keep most beta units active on inputs in [-1, 1].
pub fn bench_ranges() -> BetaRanges {
    BetaRanges {
        p: (1.0, 3.0),
        q: (1.0, 3.0),
        u0: (-1.5, -0.5),
        u1: (0.5, 1.5),
    }
}
