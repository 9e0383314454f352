mod common;

use bbfnn_core::{pseudo_inverse, scale_to_spectral_radius, spectral_radius, Matrix};
use common::*;
use proptest::prelude::*;

fn penrose_residuals(a: &Matrix, p: &Matrix) -> [f64; 4] {
    let ap = a.matmul(p).unwrap();
    let pa = p.matmul(a).unwrap();
    [
        max_diff(&ap.matmul(a).unwrap(), a),
        max_diff(&pa.matmul(p).unwrap(), p),
        max_diff(&ap.transpose(), &ap),
        max_diff(&pa.transpose(), &pa),
    ]
}

#[test]
fn penrose_identities_on_random_20x30() {
    let a = random_matrix(20, 30, &mut rng(1));
    let p = pseudo_inverse(&a).unwrap();
    assert_eq!(p.shape(), (30, 20));
    let r = penrose_residuals(&a, &p);
    assert!(r[0] < 1e-8, "{r:?}");
    assert!(r.iter().all(|v| *v < 1e-8), "{r:?}");
}

#[test]
fn penrose_identities_on_rank_deficient() {
    let mut g = rng(2);
    for (m, n, r) in [(30, 20, 5), (12, 40, 3), (25, 25, 24), (40, 60, 1)] {
        let a = low_rank(m, n, r, &mut g);
        let p = pseudo_inverse(&a).unwrap();
        let tol = 1e-8 * (1.0 + a.frobenius_norm());
        let res = penrose_residuals(&a, &p);
        assert!(res.iter().all(|v| *v < tol), "{m}x{n} rank {r}: {res:?}");
    }
}

#[test]
fn double_pinv_recovers_full_rank() {
    let a = random_matrix(15, 9, &mut rng(3));
    let back = pseudo_inverse(&pseudo_inverse(&a).unwrap()).unwrap();
    assert!(max_diff(&back, &a) < 1e-6);
}

#[test]
fn spectral_radius_matches_gelfand_oracle() {
    let mut g = rng(4);
    for _ in 0..5 {
        let a = random_matrix(50, 50, &mut g);
        let fast = spectral_radius(&a).unwrap();
        let oracle = gelfand_radius(&a);
        assert!((fast - oracle).abs() <= 1e-6 * oracle, "{fast} vs {oracle}");
    }
}

#[test]
fn spectral_radius_of_sparse_matches_oracle() {
    let mut g = rng(5);
    let a = sparse_matrix(40, 0.1, &mut g);
    let fast = spectral_radius(&a).unwrap();
    let oracle = gelfand_radius(&a);
    assert!((fast - oracle).abs() <= 1e-6 * oracle.max(1e-300));
}

#[test]
fn scaled_sparse_hits_target_and_keeps_pattern() {
    let mut g = rng(6);
    let a = sparse_matrix(30, 0.15, &mut g);
    let s = scale_to_spectral_radius(&a, 0.8).unwrap();
    let rho = spectral_radius(&s).unwrap();
    assert!((rho - 0.8).abs() <= 1e-6 * 0.8, "{rho}");
    assert!((gelfand_radius(&s) - 0.8).abs() <= 1e-6);
    for (x, y) in a.as_slice().iter().zip(s.as_slice()) {
        assert_eq!(*x == 0.0, *y == 0.0);
    }
}

fn shape_and_seed() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..12, 1usize..12, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penrose_holds_for_any_shape((m, n, seed) in shape_and_seed()) {
        let a = random_matrix(m, n, &mut rng(seed));
        let p = pseudo_inverse(&a).unwrap();
        let tol = 1e-8 * (1.0 + a.frobenius_norm());
        for r in penrose_residuals(&a, &p) {
            prop_assert!(r < tol);
        }
    }

    #[test]
    fn radius_is_absolutely_homogeneous(seed in any::<u64>(), c in -3.0f64..3.0) {
        let a = random_matrix(8, 8, &mut rng(seed));
        let lhs = spectral_radius(&a.scale(c)).unwrap();
        let rhs = c.abs() * spectral_radius(&a).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1e-12));
    }
}

#[test]
fn penrose_holds_across_many_rank_deficient_shapes() {
    for seed in 0..200u64 {
        let mut g = rng(seed);
        let (m, n) = (5 + (seed % 30) as usize, 3 + (seed % 17) as usize);
        let r = 1 + (seed % 4) as usize;
        let a = low_rank(m, n, r, &mut g);
        let p = pseudo_inverse(&a).unwrap();
        let tol = 1e-8 * (1.0 + a.frobenius_norm());
        let res = penrose_residuals(&a, &p);
        assert!(res.iter().all(|v| *v < tol), "seed {seed} {m}x{n} rank {r}: {res:?}");
    }
}
