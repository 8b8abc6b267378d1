mod support;

use fedsim_core::data::Dataset;
use fedsim_core::model::{hybrid_loss_and_grads, HybridParams, ModelDims};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIMS: ModelDims = ModelDims { features: 8, hidden: 16, qubits: 4, layers: 2, classes: 4 };

fn random_model(rng: &mut ChaCha8Rng) -> HybridParams {
    let mut p = HybridParams::init(&DIMS, rng.random()).unwrap();
    // Non-zero biases so every parameter block is exercised.
    for v in p.classical.as_flat_mut() {
        *v += rng.random_range(-0.3..0.3);
    }
    p
}

fn batch(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    let features = (0..n * DIMS.features).map(|_| rng.random_range(-2.0..2.0)).collect();
    let labels = (0..n).map(|_| rng.random_range(0..DIMS.classes)).collect();
    Dataset::new(features, labels, DIMS.features, DIMS.classes).unwrap()
}

fn oracle_batch_loss(flat: &[f64], data: &Dataset, mu: f64, anchor: &[f64]) -> f64 {
    let n = data.len();
    let ce: f64 = (0..n)
        .map(|i| support::oracle_loss(flat, data.feature(i), data.label(i), 8, 16, 4, 4))
        .sum::<f64>()
        / n as f64;
    let prox: f64 = flat.iter().zip(anchor).map(|(a, b)| (a - b) * (a - b)).sum();
    ce + 0.5 * mu * prox
}

fn check_against_fd(rng: &mut ChaCha8Rng, mu: f64) {
    let params = random_model(rng);
    let anchor = random_model(rng);
    let data = batch(rng, 2);
    let all: Vec<usize> = (0..data.len()).collect();
    let grads = hybrid_loss_and_grads(&data, &all, &params, mu, Some(&anchor)).unwrap();
    let flat = params.flatten();
    let anchor_flat = anchor.flatten();
    let value = oracle_batch_loss(&flat, &data, mu, &anchor_flat);
    assert!((value - grads.loss).abs() < 1e-10, "{value} vs {}", grads.loss);
    let analytic: Vec<f64> = grads.classical.iter().chain(&grads.quantum).copied().collect();
    let h = 1e-5;
    for k in 0..flat.len() {
        let (mut p, mut m) = (flat.clone(), flat.clone());
        p[k] += h;
        m[k] -= h;
        let fd = (oracle_batch_loss(&p, &data, mu, &anchor_flat) - oracle_batch_loss(&m, &data, mu, &anchor_flat)) / (2.0 * h);
        let scale = fd.abs().max(analytic[k].abs());
        let rel = if scale == 0.0 { 0.0 } else { (fd - analytic[k]).abs() / scale };
        assert!(rel < 1e-5, "param {k}: fd {fd} analytic {}", analytic[k]);
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        check_against_fd(&mut rng, 0.0);
    }
}

#[test]
fn proximal_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..3 {
        check_against_fd(&mut rng, 0.05);
    }
}

#[test]
fn zero_mu_ignores_anchor() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let params = random_model(&mut rng);
    let anchor = random_model(&mut rng);
    let data = batch(&mut rng, 3);
    let with = hybrid_loss_and_grads(&data, &[0, 1, 2], &params, 0.0, Some(&anchor)).unwrap();
    let without = hybrid_loss_and_grads(&data, &[0, 1, 2], &params, 0.0, None).unwrap();
    assert_eq!(with, without);
}
