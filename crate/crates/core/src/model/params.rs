use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::wrap;
use crate::error::{param, Result};
use crate::rng::rng_from_seed;

/// Architecture: `features -> hidden -> qubits` dense tanh layers, then a
/// `qubits`-wide circuit with `layers` variational layers read out on the
/// first `classes` qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub features: usize,
    pub hidden: usize,
    pub qubits: usize,
    pub layers: usize,
    pub classes: usize,
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        if self.features == 0 || self.hidden == 0 || self.qubits == 0 {
            return param("features, hidden and qubits must all be at least 1");
        }
        if self.classes == 0 {
            return param("classes must be at least 1");
        }
        if self.classes > self.qubits {
            return param(format!(
                "{} classes need at least as many qubits, have {}",
                self.classes, self.qubits
            ));
        }
        if self.qubits > 20 {
            return param("more than 20 qubits is out of reach for the dense statevector");
        }
        Ok(())
    }

    pub fn classical_len(&self) -> usize {
        self.features * self.hidden + self.hidden + self.hidden * self.qubits + self.qubits
    }

    pub fn quantum_len(&self) -> usize {
        self.qubits * self.layers
    }
}

/// Flattened MLP parameters in the order `W1 (hidden x features, row-major), b1, W2 (qubits x hidden), b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalParams {
    features: usize,
    hidden: usize,
    qubits: usize,
    values: Vec<f64>,
}

impl ClassicalParams {
    pub fn from_flat(features: usize, hidden: usize, qubits: usize, values: Vec<f64>) -> Result<Self> {
        let expected = features * hidden + hidden + hidden * qubits + qubits;
        if values.len() != expected {
            return param(format!("classical vector has {} values, expected {expected}", values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return param("classical parameters must be finite");
        }
        Ok(Self { features, hidden, qubits, values })
    }

    pub fn zeros(dims: &ModelDims) -> Self {
        Self {
            features: dims.features,
            hidden: dims.hidden,
            qubits: dims.qubits,
            values: vec![0.0; dims.classical_len()],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(dims: &ModelDims, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(dims);
        let l1 = (6.0 / (dims.features + dims.hidden) as f64).sqrt();
        let l2 = (6.0 / (dims.hidden + dims.qubits) as f64).sqrt();
        p.w1_mut().iter_mut().for_each(|w| *w = rng.random_range(-l1..l1));
        p.w2_mut().iter_mut().for_each(|w| *w = rng.random_range(-l2..l2));
        p
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    fn offsets(&self) -> [usize; 4] {
        let w1 = self.features * self.hidden;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.hidden * self.qubits;
        [w1, b1, w2, w2 + self.qubits]
    }

    pub fn w1(&self) -> &[f64] {
        &self.values[..self.offsets()[0]]
    }

    pub fn b1(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[0]..o[1]]
    }

    pub fn w2(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[1]..o[2]]
    }

    pub fn b2(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[2]..o[3]]
    }

    pub fn w1_mut(&mut self) -> &mut [f64] {
        let o = self.offsets();
        &mut self.values[..o[0]]
    }

    pub fn w2_mut(&mut self) -> &mut [f64] {
        let o = self.offsets();
        &mut self.values[o[1]..o[2]]
    }
}

/// Variational angles laid out layer-major: `angles[layer * qubits + qubit]`.
///
/// Uploaded and aggregated parameters are kept canonical (every angle in
/// `(-pi, pi]`); the raw angles may drift outside that range during local training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumParams {
    qubits: usize,
    layers: usize,
    angles: Vec<f64>,
}

impl QuantumParams {
    pub fn new(qubits: usize, layers: usize, angles: Vec<f64>) -> Result<Self> {
        if angles.len() != qubits * layers {
            return param(format!("{} angles for {qubits} qubits x {layers} layers", angles.len()));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return param("quantum angles must be finite");
        }
        Ok(Self { qubits, layers, angles })
    }

    /// Uniform angles in `(-pi, pi]`.
    pub fn uniform(dims: &ModelDims, rng: &mut impl Rng) -> Self {
        use std::f64::consts::PI;
        let angles = (0..dims.quantum_len()).map(|_| wrap(rng.random_range(-PI..PI))).collect();
        Self { qubits: dims.qubits, layers: dims.layers, angles }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angles_mut(&mut self) -> &mut [f64] {
        &mut self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn wrapped(&self) -> Self {
        Self { angles: self.angles.iter().map(|&a| wrap(a)).collect(), ..*self }
    }

    pub fn is_canonical(&self) -> bool {
        use std::f64::consts::PI;
        self.angles.iter().all(|&a| a > -PI && a <= PI)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridParams {
    pub classical: ClassicalParams,
    pub quantum: QuantumParams,
}

impl HybridParams {
    /// Seeded initial model.
    pub fn init(dims: &ModelDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut rng = rng_from_seed(seed);
        let classical = ClassicalParams::glorot(dims, &mut rng);
        let quantum = QuantumParams::uniform(dims, &mut rng);
        Ok(Self { classical, quantum })
    }

    pub fn zeros(dims: &ModelDims) -> Self {
        Self {
            classical: ClassicalParams::zeros(dims),
            quantum: QuantumParams { qubits: dims.qubits, layers: dims.layers, angles: vec![0.0; dims.quantum_len()] },
        }
    }

    pub fn dims(&self, classes: usize) -> ModelDims {
        ModelDims {
            features: self.classical.features,
            hidden: self.classical.hidden,
            qubits: self.classical.qubits,
            layers: self.quantum.layers,
            classes,
        }
    }

    /// Classical values followed by the quantum angles.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.classical.values.clone();
        v.extend_from_slice(&self.quantum.angles);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.classical.values.iter().chain(&self.quantum.angles).all(|v| v.is_finite())
    }
}
