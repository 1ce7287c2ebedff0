//! Metrics against an independent pairwise-difference formulation.
//!
//! With population moments, `n² var(x) = Σ_{i<j} (x_i - x_j)²` and
//! `n² cov(x, y) = Σ_{i<j} (x_i - x_j)(y_i - y_j)`, so neither the oracle's
//! sums nor its order of operations share anything with the implementation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use valence_core::metrics::{ccc, evaluate_sequences, evaluate_timeline, pearson_cc, rmse, TimelineRef, POOLED_ID};

fn pairwise(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
    }
    let n2 = (x.len() * x.len()) as f64;
    (sxx / n2, syy / n2, sxy / n2)
}

fn oracle_cc(x: &[f64], y: &[f64]) -> f64 {
    let (vx, vy, c) = pairwise(x, y);
    c / (vx * vy).sqrt()
}

fn oracle_ccc(x: &[f64], y: &[f64]) -> f64 {
    let (vx, vy, c) = pairwise(x, y);
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    2.0 * c / (vx + vy + (mx - my) * (mx - my))
}

fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let slope = rng.random_range(-1.0..1.0);
    let offset = rng.random_range(-0.5..0.5);
    let y = x.iter().map(|v| slope * v + offset + rng.random_range(-0.5..0.5)).collect();
    (x, y)
}

#[test]
fn cc_and_ccc_match_pairwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let n = rng.random_range(2..120);
        let (x, y) = random_pair(&mut rng, n);
        assert!((pearson_cc(&x, &y).unwrap() - oracle_cc(&x, &y)).abs() < 1e-12);
        assert!((ccc(&x, &y).unwrap() - oracle_ccc(&x, &y)).abs() < 1e-12);
        let direct = (x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((rmse(&x, &y).unwrap() - direct).abs() < 1e-12);
    }
}

#[test]
fn affine_map_separates_cc_from_ccc() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
    for (a, b) in [(2.0, 1.0), (1.0, 0.2), (0.5, 0.0), (1.0, -0.3)] {
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        assert!((pearson_cc(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!(ccc(&x, &y).unwrap() < 1.0 - 1e-6, "a={a} b={b}");
    }
    assert_eq!(ccc(&x, &x).unwrap(), 1.0);
}

#[test]
fn shift_lowers_ccc_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gold: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pred: Vec<f64> = gold.iter().map(|v| v + 0.2).collect();
    let s = evaluate_timeline(&pred, &gold, &vec![false; 100]).unwrap();
    assert!((s.cc - 1.0).abs() < 1e-12);
    assert!(s.ccc < 1.0);
    assert!((s.rmse - 0.2).abs() < 1e-12);
}

#[test]
fn pooled_row_concatenates_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (p1, g1) = random_pair(&mut rng, 40);
    let (p2, g2) = random_pair(&mut rng, 25);
    let m1 = vec![false; 40];
    let mut m2 = vec![false; 25];
    m2[3] = true;
    let report = evaluate_sequences(&[
        TimelineRef { sequence_id: "a", pred: &p1, gold: &g1, mask: &m1 },
        TimelineRef { sequence_id: "b", pred: &p2, gold: &g2, mask: &m2 },
    ])
    .unwrap();
    let all_p: Vec<f64> = p1.iter().chain(&p2).copied().collect();
    let all_g: Vec<f64> = g1.iter().chain(&g2).copied().collect();
    assert_eq!(report.pooled.sequence_id, POOLED_ID);
    assert_eq!(report.pooled.n, 65);
    assert_eq!(report.pooled.interpolated, 1);
    assert!((report.pooled.scores.ccc - oracle_ccc(&all_p, &all_g)).abs() < 1e-12);
    assert!((report.sequences[1].scores.cc - oracle_cc(&p2, &g2)).abs() < 1e-12);
    assert_eq!(report.sequences[0].n, 40);
}
