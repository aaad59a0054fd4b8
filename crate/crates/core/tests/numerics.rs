mod common;

use common::{gradient_check, knapsack_stats, multichoice_stats, oracle_forward};
use pavenet::agent::FEATURE_DIM;
use pavenet::deterioration::{RehabEffect, WeibullCurve};
use pavenet::nn::{decode, encode, load_weights, save_weights};
use pavenet::nn::{DenseNet, Head};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SHAPES: [(&[usize], Head); 3] = [
    (&[FEATURE_DIM, 64, 64, 3], Head::Linear),
    (&[FEATURE_DIM, 64, 64, 3], Head::Softmax),
    (&[FEATURE_DIM, 64, 64, 1], Head::Linear),
];

#[test]
fn gradients_match_finite_differences() {
    for (i, (dims, head)) in SHAPES.iter().enumerate() {
        let err = gradient_check(dims, *head, 11 + i as u64, 3);
        assert!(err <= 1e-4, "{dims:?} {head:?}: relative error {err:e}");
    }
}

#[test]
fn forward_matches_independent_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (i, (dims, head)) in SHAPES.iter().enumerate() {
        let net = DenseNet::<f64>::new(dims, *head, i as u64).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.random_range(-2.0..2.0)).collect();
            let got = net.forward(&x).unwrap();
            let want = oracle_forward(&net, &x);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn batched_forward_equals_row_by_row() {
    let net = DenseNet::<f64>::new(&[FEATURE_DIM, 16, 3], Head::Softmax, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows = 1300;
    let xs: Vec<f64> = (0..rows * FEATURE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
    let batch = net.forward_batch(&xs).unwrap();
    for r in 0..rows {
        let one = net.forward(&xs[r * FEATURE_DIM..(r + 1) * FEATURE_DIM]).unwrap();
        assert_eq!(&batch[r * 3..r * 3 + 3], &one[..]);
    }
}

#[test]
fn weights_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (i, (dims, head)) in SHAPES.iter().enumerate() {
        let net = DenseNet::<f64>::new(dims, *head, 100 + i as u64).unwrap();
        let path = dir.path().join(format!("net{i}.bin"));
        save_weights(&net, &path).unwrap();
        let back: DenseNet<f64> = load_weights(&path).unwrap();
        assert_eq!(back, net);
        assert_eq!(encode(&back), encode(&net));
        for _ in 0..100 {
            let x: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (a, b) = (net.forward(&x).unwrap(), back.forward(&x).unwrap());
            assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}

#[test]
fn corrupt_weight_files_are_rejected() {
    let net = DenseNet::<f64>::new(&[3, 4, 2], Head::Linear, 0).unwrap();
    let bytes = encode(&net);
    assert!(decode::<f64>(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(decode::<f64>(&bad).is_err());
    let mut long = bytes;
    long.push(0);
    assert!(decode::<f64>(&long).is_err());
}

#[test]
fn weibull_age_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let lambda: f64 = rng.random_range(1e-4..0.05);
        let k: f64 = rng.random_range(1.0..3.0);
        let curve = WeibullCurve::new(lambda, k).unwrap();
        let tau = rng.random_range(0.0..60.0);
        let pqi = curve.pqi_at_age(tau).unwrap();
        if pqi < 1e-3 {
            continue;
        }
        let back = curve.pqi_at_age(curve.effective_age(pqi).unwrap()).unwrap();
        assert!((back - pqi).abs() <= 1e-9, "{pqi} -> {back}");
    }
}

#[test]
fn rehabilitation_hand_cases() {
    let r = RehabEffect::<f64>::default();
    assert!((r.apply(4.75) - 6.0).abs() < 1e-12);
    assert_eq!(r.apply(9.5), 9.5);
    assert_eq!(r.apply(9.8), 9.8);
    assert_eq!(r.apply(0.0), 0.0);
}

#[test]
fn greedy_knapsack_tracks_exact_optimum() {
    let s = knapsack_stats(200, 25, 2024);
    assert_eq!(s.infeasible, 0);
    assert_eq!(s.non_maximal, 0);
    assert!(s.near_optimal * 100 >= 95 * s.instances, "{s:?}");
}

#[test]
fn multichoice_greedy_tracks_exhaustive_optimum() {
    let s = multichoice_stats(200, 8, 2025);
    assert_eq!(s.infeasible, 0);
    assert!(s.within_tolerance * 100 >= 95 * s.instances, "{s:?}");
}
