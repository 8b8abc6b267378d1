use super::{mlp_backward, mlp_forward, param_shift_grad, circuit_forward, HybridParams};
use crate::data::Dataset;
use crate::error::{param, Result};
use crate::numeric::CompensatedSum;

/// Batch-mean objective value and gradients in the flattened layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGrads {
    pub loss: f64,
    pub classical: Vec<f64>,
    pub quantum: Vec<f64>,
}

/// Returns `(loss, dL/dlogits)` for softmax cross-entropy against `label`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = z.ln() + max - logits[label];
    let mut grad: Vec<f64> = exps.iter().map(|e| e / z).collect();
    grad[label] -= 1.0;
    (loss, grad)
}

/// Mean cross-entropy over `batch` plus the optional proximal term
/// `(mu / 2) ||params - anchor||^2`, with gradients by backprop through the
/// MLP and parameter-shift through the circuit.
pub fn hybrid_loss_and_grads(
    dataset: &Dataset,
    batch: &[usize],
    params: &HybridParams,
    prox_mu: f64,
    prox_anchor: Option<&HybridParams>,
) -> Result<LossAndGrads> {
    if batch.is_empty() {
        return param("empty batch");
    }
    let classes = dataset.classes();
    let qubits = params.quantum.qubits();
    let angles = params.quantum.angles();
    let mut grad_c = vec![0.0; params.classical.as_flat().len()];
    let mut grad_q = vec![0.0; angles.len()];
    let mut loss = CompensatedSum::new();
    let scale = 1.0 / batch.len() as f64;

    for &i in batch {
        let (embedding, cache) = mlp_forward(&params.classical, dataset.feature(i))?;
        let logits = circuit_forward(&embedding, angles, qubits, classes)?;
        let (l, upstream) = softmax_cross_entropy(&logits, dataset.label(i));
        loss.add(l);
        let (gq, ge) = param_shift_grad(&embedding, angles, qubits, &upstream)?;
        for (acc, g) in grad_q.iter_mut().zip(&gq) {
            *acc += scale * g;
        }
        mlp_backward(&params.classical, &cache, &ge, scale, &mut grad_c);
    }
    let mut loss = loss.value() * scale;

    if let Some(anchor) = prox_anchor.filter(|_| prox_mu != 0.0) {
        if anchor.flatten().len() != params.flatten().len() {
            return param("prox anchor shape differs from the model");
        }
        let mut sq = CompensatedSum::new();
        let pairs = params
            .classical
            .as_flat()
            .iter()
            .zip(anchor.classical.as_flat())
            .zip(grad_c.iter_mut())
            .chain(params.quantum.angles().iter().zip(anchor.quantum.angles()).zip(grad_q.iter_mut()));
        for ((p, a), g) in pairs {
            let d = p - a;
            sq.add(d * d);
            *g += prox_mu * d;
        }
        loss += 0.5 * prox_mu * sq.value();
    }
    Ok(LossAndGrads { loss, classical: grad_c, quantum: grad_q })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_c() {
        let (l, g) = softmax_cross_entropy(&[0.3; 4], 2);
        assert!((l - 4f64.ln()).abs() < 1e-15);
        assert!((g[2] + 0.75).abs() < 1e-15);
        assert!((g[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_oracle() {
        let logits = [0.9, -0.2, 0.1];
        let z: f64 = logits.iter().map(|l: &f64| l.exp()).sum();
        let expected = -(logits[1].exp() / z).ln();
        let (l, _) = softmax_cross_entropy(&logits, 1);
        assert!((l - expected).abs() < 1e-14);
    }
}
