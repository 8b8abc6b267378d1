use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{circuit_forward, hybrid_loss_and_grads, mlp_forward, HybridParams};
use crate::data::{class_distribution, ClassDistribution, ClientDataset, Dataset};
use crate::error::{param, Result};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::rng::rng_from_seed;

/// What a client sends back after a round of local training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientUpdate {
    pub client_id: usize,
    pub params: HybridParams,
    pub distribution: ClassDistribution,
    /// Sample-weighted mean objective over the final epoch.
    pub train_loss: f64,
    /// Sample visits across all epochs.
    pub samples_seen: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub prox_mu: f64,
}

/// Adam over the concatenation `classical ++ quantum`; `state` must cover both.
pub fn adam_local_step(
    params: &mut HybridParams,
    grad_classical: &[f64],
    grad_quantum: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    let n_c = params.classical.as_flat().len();
    let n_q = params.quantum.len();
    if grad_classical.len() != n_c || grad_quantum.len() != n_q || state.len() != n_c + n_q {
        return param("Adam step shapes do not match the model");
    }
    let mut flat = params.flatten();
    let grads: Vec<f64> = grad_classical.iter().chain(grad_quantum).copied().collect();
    adam_step(&mut flat, &grads, state, cfg);
    params.classical.as_flat_mut().copy_from_slice(&flat[..n_c]);
    params.quantum.angles_mut().copy_from_slice(&flat[n_c..]);
    Ok(())
}

/// Runs `epochs` passes of shuffled mini-batch Adam from `init`, with a fresh
/// optimizer state. A proximal pull towards `init` is added when `prox_mu > 0`.
pub fn local_train(
    client: &ClientDataset,
    dataset: &Dataset,
    init: &HybridParams,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<ClientUpdate> {
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return param("epochs and batch_size must be at least 1");
    }
    if !(cfg.lr >= 0.0 && cfg.prox_mu >= 0.0) {
        return param("learning rate and prox_mu must be non-negative");
    }
    let distribution = class_distribution(client, dataset)?;
    let mut rng = rng_from_seed(seed);
    let mut params = init.clone();
    let mut state = AdamState::zeros(params.flatten().len());
    let adam = AdamConfig::with_lr(cfg.lr);
    let anchor = (cfg.prox_mu > 0.0).then_some(init);
    let mut order = client.indices.clone();
    let mut train_loss = 0.0;
    let mut samples_seen = 0;

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let step = hybrid_loss_and_grads(dataset, batch, &params, cfg.prox_mu, anchor)?;
            epoch_loss += step.loss * batch.len() as f64;
            adam_local_step(&mut params, &step.classical, &step.quantum, &mut state, &adam)?;
        }
        samples_seen += order.len();
        train_loss = epoch_loss / order.len() as f64;
    }
    params.quantum = params.quantum.wrapped();
    if !params.is_finite() {
        return Err(crate::Error::Numeric(format!("client {} diverged", client.client_id)));
    }
    Ok(ClientUpdate { client_id: client.client_id, params, distribution, train_loss, samples_seen })
}

/// Arg-max class and the cross-entropy for one sample.
pub fn predict(params: &HybridParams, x: &[f64], label: usize, classes: usize) -> Result<(usize, f64)> {
    let (embedding, _) = mlp_forward(&params.classical, x)?;
    let logits = circuit_forward(&embedding, params.quantum.angles(), params.quantum.qubits(), classes)?;
    let (loss, _) = super::softmax_cross_entropy(&logits, label);
    let mut best = 0;
    for (c, &l) in logits.iter().enumerate() {
        if l > logits[best] {
            best = c;
        }
    }
    Ok((best, loss))
}
