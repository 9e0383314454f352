//! Independent reference routines shared by the integration tests. None of
//! these call into the decompositions the crate uses.

#![allow(dead_code)]

use bbfnn_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Product of an `m x r` and an `r x n` random factor: rank at most `r`.
pub fn low_rank(rows: usize, cols: usize, rank: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let a = random_matrix(rows, rank, rng);
    let b = random_matrix(rank, cols, rng);
    a.matmul(&b).unwrap()
}

pub fn sparse_matrix(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(n, n, |_, _| {
        if rng.random::<f64>() < density {
            rng.random_range(-1.0..1.0)
        } else {
            0.0
        }
    })
}

/// Spectral radius by the Gelfand limit `||A^(2^k)||^(1/2^k)`, with
/// renormalisation after every squaring so nothing overflows.
pub fn gelfand_radius(a: &Matrix) -> f64 {
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut b = a.scale(1.0 / norm);
    let mut log_norm = norm.ln();
    let mut power = 1.0_f64;
    for _ in 0..60 {
        let sq = b.matmul(&b).unwrap();
        let n = sq.frobenius_norm();
        if n == 0.0 {
            return 0.0;
        }
        log_norm = 2.0 * log_norm + n.ln();
        power *= 2.0;
        b = sq.scale(1.0 / n);
    }
    (log_norm / power).exp()
}

/// Numerical rank by Gaussian elimination with complete pivoting.
pub fn gaussian_rank(a: &Matrix, rel_tol: f64) -> usize {
    let (m, n) = a.shape();
    let mut w: Vec<Vec<f64>> = a.iter_rows().map(|r| r.to_vec()).collect();
    let scale = a.max_abs();
    let mut rank = 0;
    for step in 0..m.min(n) {
        let (mut pi, mut pj, mut best) = (step, step, 0.0);
        for (i, row) in w.iter().enumerate().skip(step) {
            for (j, v) in row.iter().enumerate().skip(step) {
                if v.abs() > best {
                    best = v.abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= rel_tol * scale {
            break;
        }
        w.swap(step, pi);
        for row in w.iter_mut() {
            row.swap(step, pj);
        }
        let (top, below) = w.split_at_mut(step + 1);
        let pivot = &top[step];
        for row in below {
            let f = row[step] / pivot[step];
            for (x, p) in row[step..].iter_mut().zip(&pivot[step..]) {
                *x -= f * p;
            }
        }
        rank += 1;
    }
    rank
}

pub fn max_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().max_abs()
}
