mod common;

use bbfnn_core::{
    inject_noise, kfold, kfold_indices, lag_embed, mse, normalize, rmse, split_holdout,
    classification_accuracy, improvement_rate, mean_std, Dataset, LagSpec, Matrix, MetricKind,
    NormRange, TaskKind,
};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn dataset(m: usize, k: usize, task: TaskKind, seed: u64) -> Dataset {
    let mut g = rng(seed);
    let inputs = Matrix::from_fn(m, k, |_, _| g.random_range(-50.0..50.0));
    let targets = match task {
        TaskKind::Classification { num_classes } => {
            Matrix::from_fn(m, 1, |_, _| g.random_range(0..num_classes) as f64)
        }
        _ => Matrix::from_fn(m, 1, |_, _| g.random_range(-5.0..5.0)),
    };
    Dataset::new("synthetic", inputs, targets, task).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_then_invert_round_trips(m in 2usize..40, k in 1usize..5, seed in any::<u64>(), symmetric in any::<bool>()) {
        let ds = dataset(m, k, TaskKind::Prediction, seed);
        let range = if symmetric { NormRange::Symmetric } else { NormRange::Unit };
        let (scaled, stats) = normalize(&ds, range).unwrap();
        let (lo, hi) = if symmetric { (-1.0, 1.0) } else { (0.0, 1.0) };
        for v in scaled.inputs.as_slice().iter().chain(scaled.targets.as_slice()) {
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
        let back = stats.invert(&scaled).unwrap();
        prop_assert!(max_diff(&back.inputs, &ds.inputs) <= 1e-9);
        prop_assert!(max_diff(&back.targets, &ds.targets) <= 1e-9);
    }

    #[test]
    fn class_codes_survive_normalization(m in 2usize..40, seed in any::<u64>()) {
        let ds = dataset(m, 3, TaskKind::Classification { num_classes: 3 }, seed);
        let (scaled, _) = normalize(&ds, NormRange::Unit).unwrap();
        prop_assert_eq!(scaled.targets, ds.targets);
    }

    #[test]
    fn kfold_indices_partition_the_rows(m in 2usize..200, k in 2usize..12, seed in any::<u64>(), shuffle in any::<bool>()) {
        prop_assume!(k <= m);
        let folds = kfold_indices(m, k, shuffle, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0usize; m];
        for f in &folds {
            prop_assert!(f.len() == m / k || f.len() == m / k + 1);
            for &i in f {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|c| *c == 1));
    }

    #[test]
    fn kfold_train_and_test_are_complementary(m in 10usize..80, k in 2usize..6, seed in any::<u64>()) {
        let ds = dataset(m, 2, TaskKind::Regression, seed);
        for fold in kfold(&ds, k, seed).unwrap() {
            prop_assert_eq!(fold.train.len() + fold.test.len(), m);
            prop_assert_eq!(fold.test.len(), fold.test_indices.len());
        }
    }

    #[test]
    fn temporal_holdout_keeps_time_order(m in 4usize..100, frac in 0.3f64..0.9, seed in any::<u64>()) {
        let ds = dataset(m, 1, TaskKind::Prediction, seed);
        let (train, test) = split_holdout(&ds, frac, true, seed).unwrap();
        let n = (frac * m as f64).round() as usize;
        prop_assert_eq!(train.len(), n);
        prop_assert_eq!(train.inputs.row(0), ds.inputs.row(0));
        prop_assert_eq!(test.inputs.row(0), ds.inputs.row(n));
    }

    #[test]
    fn error_metrics_are_invariant_to_joint_shifts(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..50),
        c in -100.0f64..100.0,
    ) {
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let ps: Vec<f64> = p.iter().map(|v| v + c).collect();
        let ts: Vec<f64> = t.iter().map(|v| v + c).collect();
        let a = mse(&p, &t).unwrap();
        prop_assert!((a - mse(&ps, &ts).unwrap()).abs() <= 1e-9 * (1.0 + a));
        prop_assert!((rmse(&p, &t).unwrap() - a.sqrt()).abs() <= 1e-12);
        prop_assert_eq!(mse(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_is_permutation_invariant(codes in prop::collection::vec((0usize..3, 0usize..3), 1..60), rot in 0usize..60) {
        let p: Vec<f64> = codes.iter().map(|c| c.0 as f64).collect();
        let t: Vec<f64> = codes.iter().map(|c| c.1 as f64).collect();
        let r = rot % p.len();
        let (mut p2, mut t2) = (p.clone(), t.clone());
        p2.rotate_left(r);
        t2.rotate_left(r);
        let a = classification_accuracy(&p, &t, 3).unwrap();
        prop_assert_eq!(a, classification_accuracy(&p2, &t2, 3).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn improvement_rate_sign_tracks_quality(base in 0.01f64..10.0, cand in 0.01f64..10.0) {
        let err = improvement_rate(cand, base, MetricKind::Rmse).unwrap();
        let acc = improvement_rate(cand, base, MetricKind::Ca).unwrap();
        prop_assert_eq!(err > 0.0, cand < base);
        prop_assert_eq!(acc > 0.0, cand > base);
    }
}

#[test]
fn noise_hits_requested_snr() {
    let ds = dataset(20_000, 3, TaskKind::Regression, 1);
    for snr in [50.0, 10.0, 1.0] {
        let noisy = inject_noise(&ds, snr, &mut rng(2)).unwrap();
        for j in 0..3 {
            let signal: f64 = ds.inputs.column(j).iter().map(|v| v * v).sum();
            let noise: f64 = noisy
                .inputs
                .column(j)
                .iter()
                .zip(ds.inputs.column(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let measured = 10.0 * (signal / noise).log10();
            assert!((measured - snr).abs() <= 1.0, "column {j}: {measured} dB vs {snr}");
        }
        assert_eq!(noisy.targets, ds.targets);
    }
}

#[test]
fn lag_embedding_matches_hand_layout() {
    let series = Matrix::from_fn(8, 2, |i, j| (10 * j + i) as f64);
    let ds = lag_embed(
        "furnace",
        &series,
        &[LagSpec { column: 1, lag: 1 }, LagSpec { column: 0, lag: 4 }],
        1,
    )
    .unwrap();
    assert_eq!(ds.len(), 4);
    for t in 4..8 {
        let row = ds.inputs.row(t - 4);
        assert_eq!(row, &[(10 + t - 1) as f64, (t - 4) as f64]);
        assert_eq!(ds.targets.get(t - 4, 0), (10 + t) as f64);
    }
}

#[test]
fn sample_std_uses_n_minus_one() {
    let (mean, std) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
    assert_eq!(mean, 5.0);
    assert!((std - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
}
