//! Reference implementations used as test oracles. Deliberately naive: dense
//! matrices, plain loops, no shared code with the library.
#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

use std::f64::consts::PI;

pub type Dense = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![0.0; ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            for j in 0..m {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn ry(theta: f64) -> Dense {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    vec![vec![c, -s], vec![s, c]]
}

/// Single-qubit gate on `qubit`, where qubit `q` is bit `q` of the basis index,
/// so the Kronecker order runs from the highest qubit down to qubit 0.
pub fn embed_one(g: &Dense, qubit: usize, qubits: usize) -> Dense {
    let mut out = vec![vec![1.0]];
    for q in (0..qubits).rev() {
        let factor = if q == qubit { g.clone() } else { identity(2) };
        out = kron(&out, &factor);
    }
    out
}

pub fn cnot(control: usize, target: usize, qubits: usize) -> Dense {
    let dim = 1 << qubits;
    let mut out = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        let i = if (j >> control) & 1 == 1 { j ^ (1 << target) } else { j };
        out[i][j] = 1.0;
    }
    out
}

/// Full circuit unitary: encoding, then per layer RYs followed by the CNOT ring.
pub fn circuit_unitary(embedding: &[f64], angles: &[f64], qubits: usize) -> Dense {
    let mut u = identity(1 << qubits);
    let mut push = |g: Dense| u = matmul(&g, &u);
    for q in 0..qubits {
        push(embed_one(&ry(PI * embedding[q]), q, qubits));
    }
    for layer in 0..angles.len() / qubits {
        for q in 0..qubits {
            push(embed_one(&ry(angles[layer * qubits + q]), q, qubits));
        }
        if qubits > 1 {
            for q in 0..qubits {
                push(cnot(q, (q + 1) % qubits, qubits));
            }
        }
    }
    u
}

pub fn dense_statevector(embedding: &[f64], angles: &[f64], qubits: usize) -> Vec<f64> {
    circuit_unitary(embedding, angles, qubits).iter().map(|row| row[0]).collect()
}

/// `<Z_q>` as `psi^T Z_q psi` with the dense diagonal operator.
pub fn dense_expectation_z(state: &[f64], qubit: usize, qubits: usize) -> f64 {
    let z = embed_one(&vec![vec![1.0, 0.0], vec![0.0, -1.0]], qubit, qubits);
    let mut acc = 0.0;
    for i in 0..state.len() {
        for j in 0..state.len() {
            acc += state[i] * z[i][j] * state[j];
        }
    }
    acc
}

/// Independent forward pass of the hybrid model on flat parameters
/// `[W1 (H x F), b1, W2 (Q x H), b2, angles]`. Returns cross-entropy loss.
pub fn oracle_loss(
    flat: &[f64],
    x: &[f64],
    label: usize,
    features: usize,
    hidden: usize,
    qubits: usize,
    classes: usize,
) -> f64 {
    let (w1, rest) = flat.split_at(features * hidden);
    let (b1, rest) = rest.split_at(hidden);
    let (w2, rest) = rest.split_at(hidden * qubits);
    let (b2, angles) = rest.split_at(qubits);
    let h: Vec<f64> =
        (0..hidden).map(|r| ((0..features).map(|c| w1[r * features + c] * x[c]).sum::<f64>() + b1[r]).tanh()).collect();
    let e: Vec<f64> =
        (0..qubits).map(|r| ((0..hidden).map(|c| w2[r * hidden + c] * h[c]).sum::<f64>() + b2[r]).tanh()).collect();
    let psi = dense_statevector(&e, angles, qubits);
    let logits: Vec<f64> = (0..classes).map(|c| dense_expectation_z(&psi, c, qubits)).collect();
    let norm: f64 = logits.iter().map(|l| l.exp()).sum::<f64>().ln();
    norm - logits[label]
}

/// Plain Adam replay on a scalar: returns every iterate.
pub fn adam_scalar_replay(
    x0: f64,
    grad: impl Fn(f64) -> f64,
    steps: usize,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    wrap_each: bool,
) -> Vec<f64> {
    let (mut m, mut v, mut x) = (0.0, 0.0, x0);
    let mut out = Vec::with_capacity(steps);
    for t in 1..=steps {
        let g = grad(x);
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        let m_hat = m / (1.0 - beta1.powi(t as i32));
        let v_hat = v / (1.0 - beta2.powi(t as i32));
        x -= lr * m_hat / (v_hat.sqrt() + eps);
        if wrap_each {
            x = wrap_reference(x);
        }
        out.push(x);
    }
    out
}

/// Reference wrap into `(-pi, pi]` by repeated shifting.
pub fn wrap_reference(mut x: f64) -> f64 {
    while x > PI {
        x -= 2.0 * PI;
    }
    while x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// Shortest signed difference between two angles.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_reference(a - b).abs()
}

/// Circular mean by summing unit vectors, normalizing weights first.
pub fn circular_mean_reference(angles: &[f64], weights: &[f64]) -> (f64, f64) {
    let total: f64 = weights.iter().sum();
    let (mut s, mut c) = (0.0, 0.0);
    for (a, w) in angles.iter().zip(weights) {
        s += w / total * a.sin();
        c += w / total * a.cos();
    }
    (s.atan2(c), s.hypot(c))
}

/// `sum_i p_i ln(p_i / q_i)` with `0 ln 0 = 0`.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum()
}

pub fn js_reference(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    0.5 * kl(p, &m) + 0.5 * kl(q, &m)
}

pub fn similarity_reference(p: &[f64], q: &[f64], n_p: usize, n_q: usize, l1: f64, l2: f64) -> f64 {
    let size = (n_p as f64 - n_q as f64).abs() / (n_p + n_q) as f64;
    (-l1 * js_reference(p, q) - l2 * size).exp()
}

fn choose2(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the contingency table.
pub fn ari_reference(a: &[usize], b: &[usize]) -> f64 {
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let index: f64 = table.iter().flatten().map(|&n| choose2(n)).sum();
    let rows: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| choose2(table.iter().map(|r| r[j]).sum())).sum();
    let total = choose2(a.len());
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
