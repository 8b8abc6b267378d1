//! Real-amplitude statevector simulation of the classifier circuit.
//!
//! Qubit `q` is bit `q` of the basis-state index. RY and CNOT have real
//! matrices, so starting from `|0...0>` every amplitude stays real.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Ry { qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

/// Angle encoding `RY(pi * e_q)` on every qubit, then per layer one RY per
/// qubit followed by the CNOT ring `q -> q+1 mod Q` (no ring for one qubit).
pub fn build_gates(embedding: &[f64], angles: &[f64], qubits: usize) -> Vec<Gate> {
    let layers = angles.len() / qubits.max(1);
    let mut gates = Vec::with_capacity(qubits + layers * 2 * qubits);
    for (q, &e) in embedding.iter().enumerate() {
        gates.push(Gate::Ry { qubit: q, angle: PI * e });
    }
    for layer in angles.chunks(qubits) {
        for (q, &a) in layer.iter().enumerate() {
            gates.push(Gate::Ry { qubit: q, angle: a });
        }
        if qubits > 1 {
            for q in 0..qubits {
                gates.push(Gate::Cnot { control: q, target: (q + 1) % qubits });
            }
        }
    }
    gates
}

pub fn apply_gate(state: &mut [f64], gate: Gate) {
    match gate {
        Gate::Ry { qubit, angle } => {
            let (s, c) = (0.5 * angle).sin_cos();
            let bit = 1usize << qubit;
            for i in 0..state.len() {
                if i & bit == 0 {
                    let (a0, a1) = (state[i], state[i | bit]);
                    state[i] = c * a0 - s * a1;
                    state[i | bit] = s * a0 + c * a1;
                }
            }
        }
        Gate::Cnot { control, target } => {
            let (cb, tb) = (1usize << control, 1usize << target);
            for i in 0..state.len() {
                if i & cb != 0 && i & tb == 0 {
                    state.swap(i, i | tb);
                }
            }
        }
    }
}

pub fn simulate(gates: &[Gate], qubits: usize) -> Vec<f64> {
    let mut state = vec![0.0; 1 << qubits];
    state[0] = 1.0;
    for &g in gates {
        apply_gate(&mut state, g);
    }
    state
}

/// `<Z_q>` for the first `count` qubits.
pub fn expectations_z(state: &[f64], count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    for (i, &a) in state.iter().enumerate() {
        let p = a * a;
        for (q, o) in out.iter_mut().enumerate() {
            if i >> q & 1 == 0 {
                *o += p;
            } else {
                *o -= p;
            }
        }
    }
    out
}

fn check(embedding: &[f64], angles: &[f64], qubits: usize, classes: usize) -> Result<()> {
    if qubits == 0 {
        return param("circuit needs at least one qubit");
    }
    if classes > qubits {
        return param(format!("{classes} classes cannot be read from {qubits} qubits"));
    }
    if embedding.len() != qubits {
        return param(format!("embedding of length {} for {qubits} qubits", embedding.len()));
    }
    if !angles.len().is_multiple_of(qubits) {
        return param(format!("{} angles do not fill layers of {qubits} qubits", angles.len()));
    }
    Ok(())
}

pub fn statevector(embedding: &[f64], angles: &[f64], qubits: usize) -> Result<Vec<f64>> {
    check(embedding, angles, qubits, 0)?;
    Ok(simulate(&build_gates(embedding, angles, qubits), qubits))
}

/// Logits `<Z_c>` for `c = 0..classes`.
pub fn circuit_forward(embedding: &[f64], angles: &[f64], qubits: usize, classes: usize) -> Result<Vec<f64>> {
    check(embedding, angles, qubits, classes)?;
    let state = simulate(&build_gates(embedding, angles, qubits), qubits);
    Ok(expectations_z(&state, classes))
}

/// Parameter-shift gradients of `upstream . logits`.
///
/// Every rotation appears exactly once, so `[f(a + pi/2) - f(a - pi/2)] / 2` is
/// the exact derivative for each one. Returns `(d/d angles, d/d embedding)`;
/// the embedding gradient carries the `pi` from the encoding.
pub fn param_shift_grad(
    embedding: &[f64],
    angles: &[f64],
    qubits: usize,
    upstream: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let classes = upstream.len();
    check(embedding, angles, qubits, classes)?;
    let gates = build_gates(embedding, angles, qubits);
    let weighted = |gates: &[Gate]| -> f64 {
        let z = expectations_z(&simulate(gates, qubits), classes);
        z.iter().zip(upstream).map(|(a, b)| a * b).sum()
    };
    let mut shifted = gates.clone();
    let mut derivative = |slot: usize| -> f64 {
        let Gate::Ry { angle, qubit } = gates[slot] else { unreachable!("only RY gates are parameterized") };
        shifted[slot] = Gate::Ry { qubit, angle: angle + FRAC_PI_2 };
        let plus = weighted(&shifted);
        shifted[slot] = Gate::Ry { qubit, angle: angle - FRAC_PI_2 };
        let minus = weighted(&shifted);
        shifted[slot] = gates[slot];
        0.5 * (plus - minus)
    };

    let grad_embedding: Vec<f64> = (0..qubits).map(|q| PI * derivative(q)).collect();
    let ring = if qubits > 1 { qubits } else { 0 };
    let grad_angles = (0..angles.len())
        .map(|k| {
            let (layer, q) = (k / qubits, k % qubits);
            derivative(qubits + layer * (qubits + ring) + q)
        })
        .collect();
    Ok((grad_angles, grad_embedding))
}
