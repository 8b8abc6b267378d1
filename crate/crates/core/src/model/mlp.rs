use super::ClassicalParams;
use crate::error::{param, Result};

/// Activations kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpCache {
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub embedding: Vec<f64>,
}

fn dense_tanh(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(r, &bias)| {
            let row = &w[r * x.len()..(r + 1) * x.len()];
            (crate::numeric::dot(row, x) + bias).tanh()
        })
        .collect()
}

/// `tanh(W2 tanh(W1 x + b1) + b2)`.
pub fn mlp_forward(p: &ClassicalParams, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
    if x.len() != p.features() {
        return param(format!("input of length {} for {} features", x.len(), p.features()));
    }
    let hidden = dense_tanh(p.w1(), p.b1(), x);
    let embedding = dense_tanh(p.w2(), p.b2(), &hidden);
    Ok((embedding.clone(), MlpCache { input: x.to_vec(), hidden, embedding }))
}

/// Accumulates `scale * dL/dparams` into `grad` (flattened layout) given `dL/d embedding`.
pub fn mlp_backward(p: &ClassicalParams, cache: &MlpCache, grad_embedding: &[f64], scale: f64, grad: &mut [f64]) {
    let (f, h, q) = (p.features(), p.hidden(), p.qubits());
    let (w1_end, b1_end, w2_end) = (f * h, f * h + h, f * h + h + h * q);
    let dz2: Vec<f64> = grad_embedding
        .iter()
        .zip(&cache.embedding)
        .map(|(g, e)| scale * g * (1.0 - e * e))
        .collect();
    let w2 = p.w2();
    let mut dh = vec![0.0; h];
    for (r, &d) in dz2.iter().enumerate() {
        for c in 0..h {
            grad[b1_end + r * h + c] += d * cache.hidden[c];
            dh[c] += w2[r * h + c] * d;
        }
        grad[w2_end + r] += d;
    }
    for (r, (&d, &a)) in dh.iter().zip(&cache.hidden).enumerate() {
        let dz1 = d * (1.0 - a * a);
        for c in 0..f {
            grad[r * f + c] += dz1 * cache.input[c];
        }
        grad[w1_end + r] += dz1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDims;

    #[test]
    fn zero_params_give_zero_embedding() {
        let dims = ModelDims { features: 3, hidden: 5, qubits: 2, layers: 1, classes: 2 };
        let p = ClassicalParams::zeros(&dims);
        let (e, _) = mlp_forward(&p, &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(e, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_chain() {
        let n = 3;
        let mut values = Vec::new();
        for i in 0..n {
            for j in 0..n {
                values.push(if i == j { 1.0 } else { 0.0 });
            }
        }
        values.extend(vec![0.0; n]);
        values.extend(values[..n * n].to_vec());
        values.extend(vec![0.0; n]);
        let p = ClassicalParams::from_flat(n, n, n, values).unwrap();
        let x = [0.5, -1.5, 2.0];
        let (e, _) = mlp_forward(&p, &x).unwrap();
        for (ei, xi) in e.iter().zip(x) {
            assert_eq!(*ei, xi.tanh().tanh());
        }
    }

    #[test]
    fn wrong_input_length() {
        let dims = ModelDims { features: 3, hidden: 5, qubits: 2, layers: 1, classes: 2 };
        assert!(mlp_forward(&ClassicalParams::zeros(&dims), &[1.0]).is_err());
    }
}
