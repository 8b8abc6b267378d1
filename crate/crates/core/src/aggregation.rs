//! Server-side fusion of client parameters.
//!
//! Classical parameters are averaged per cluster with sample-count weights.
//! Quantum angles are periodic, so they are averaged on the unit circle and the
//! result is fed to a server-side Adam step that treats `phi_t - phi_bar` as the
//! gradient. The arithmetic-mean variant exists for the ablation arm and the
//! FedAvg/FedProx baselines.

use std::f64::consts::{PI, TAU};

use crate::clustering::ClusterAssignment;
use crate::error::{param, Error, Result};
use crate::model::{ClassicalParams, ClientUpdate, QuantumParams};
use crate::numeric::CompensatedSum;
use crate::optim::{adam_step, AdamConfig, AdamState};

/// FedAdam moments for the global quantum angles; `t` counts applied updates.
pub type ServerOptimizerState = AdamState;

/// Resultant length below which a circular mean is treated as undefined.
pub const DEGENERATE_RESULTANT: f64 = 1e-12;

/// Representative of `x` modulo `2 pi` in `(-pi, pi]`, for finite `x`.
pub(crate) fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

pub fn wrap_angle(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return param(format!("cannot wrap non-finite angle {x}"));
    }
    Ok(wrap(x))
}

/// Normalized sample-count weights `n_i / sum_j n_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationWeights(Vec<f64>);

impl AggregationWeights {
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return param("aggregation weights need at least one sample");
        }
        Ok(Self(counts.iter().map(|&n| n as f64 / total as f64).collect()))
    }

    /// Accepts arbitrary non-negative weights and normalizes them.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        if raw.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return param("weights must be finite and non-negative");
        }
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return param("weights must not all be zero");
        }
        Ok(Self(raw.iter().map(|w| w / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Updates in ascending client-id order; rejects duplicates.
fn canonical_order(updates: &[ClientUpdate]) -> Result<Vec<&ClientUpdate>> {
    let mut sorted: Vec<&ClientUpdate> = updates.iter().collect();
    sorted.sort_by_key(|u| u.client_id);
    if let Some(w) = sorted.windows(2).find(|w| w[0].client_id == w[1].client_id) {
        return Err(Error::Protocol(format!("client {} uploaded twice", w[0].client_id)));
    }
    Ok(sorted)
}

fn weighted_rows<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, weights: &AggregationWeights, len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let mut acc = CompensatedSum::new();
            for (row, w) in rows.clone().zip(weights.as_slice()) {
                acc.add(w * row[k]);
            }
            acc.value()
        })
        .collect()
}

/// Sample-weighted average of the classical parameters within each cluster.
/// Entry `m` of the result is the model of cluster `m`.
pub fn cluster_weighted_average(updates: &[ClientUpdate], assignment: &ClusterAssignment) -> Result<Vec<ClassicalParams>> {
    let sorted = canonical_order(updates)?;
    let mut by_client: Vec<Option<&ClientUpdate>> = vec![None; assignment.len()];
    for u in sorted {
        match by_client.get_mut(u.client_id) {
            Some(slot) => *slot = Some(u),
            None => return Err(Error::Protocol(format!("update from unassigned client {}", u.client_id))),
        }
    }
    (0..assignment.clusters())
        .map(|m| {
            let members = assignment
                .members(m)
                .into_iter()
                .map(|i| by_client[i].ok_or_else(|| Error::Protocol(format!("no update from assigned client {i}"))))
                .collect::<Result<Vec<_>>>()?;
            let counts: Vec<usize> = members.iter().map(|u| u.distribution.count).collect();
            let weights = AggregationWeights::from_counts(&counts)?;
            let first = &members[0].params.classical;
            let len = first.as_flat().len();
            if members.iter().any(|u| u.params.classical.as_flat().len() != len) {
                return Err(Error::Protocol("classical parameter shapes differ across clients".into()));
            }
            let avg = weighted_rows(members.iter().map(|u| u.params.classical.as_flat()), &weights, len);
            ClassicalParams::from_flat(first.features(), first.hidden(), first.qubits(), avg)
        })
        .collect()
}

/// Weighted circular mean: `atan2(sum w sin, sum w cos)` and the resultant length.
pub fn circular_mean(angles: &[f64], weights: &AggregationWeights) -> (f64, f64) {
    let mut s = CompensatedSum::new();
    let mut c = CompensatedSum::new();
    for (&a, &w) in angles.iter().zip(weights.as_slice()) {
        let (sin, cos) = a.sin_cos();
        s.add(w * sin);
        c.add(w * cos);
    }
    let (s, c) = (s.value(), c.value());
    (wrap(s.atan2(c)), s.hypot(c))
}

/// Circular-mean aggregate and the dimensions that fell back to the previous value.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumAggregate {
    pub params: QuantumParams,
    pub degenerate: Vec<usize>,
}

fn weights_of(updates: &[&ClientUpdate]) -> Result<AggregationWeights> {
    AggregationWeights::from_counts(&updates.iter().map(|u| u.distribution.count).collect::<Vec<_>>())
}

fn check_quantum_shapes(updates: &[&ClientUpdate], like: &QuantumParams) -> Result<()> {
    if updates.iter().any(|u| u.params.quantum.len() != like.len()) {
        return Err(Error::Protocol("quantum parameter shapes differ".into()));
    }
    Ok(())
}

/// Per-dimension weighted circular mean of the uploaded angles. A dimension
/// whose resultant is shorter than [`DEGENERATE_RESULTANT`] keeps `fallback`.
pub fn aggregate_quantum(updates: &[ClientUpdate], fallback: &QuantumParams) -> Result<QuantumAggregate> {
    let sorted = canonical_order(updates)?;
    if sorted.is_empty() {
        return param("quantum aggregation needs at least one update");
    }
    check_quantum_shapes(&sorted, fallback)?;
    let weights = weights_of(&sorted)?;
    let mut out = fallback.wrapped();
    let mut degenerate = Vec::new();
    for j in 0..fallback.len() {
        let column: Vec<f64> = sorted.iter().map(|u| u.params.quantum.angles()[j]).collect();
        let (mean, resultant) = circular_mean(&column, &weights);
        if resultant < DEGENERATE_RESULTANT {
            degenerate.push(j);
        } else {
            out.angles_mut()[j] = mean;
        }
    }
    Ok(QuantumAggregate { params: out, degenerate })
}

/// Weighted arithmetic mean of the raw angles, wrapped afterwards.
pub fn arithmetic_mean_quantum(updates: &[ClientUpdate]) -> Result<QuantumParams> {
    let sorted = canonical_order(updates)?;
    let Some(first) = sorted.first() else {
        return param("quantum aggregation needs at least one update");
    };
    let like = &first.params.quantum;
    check_quantum_shapes(&sorted, like)?;
    let weights = weights_of(&sorted)?;
    let mean = weighted_rows(sorted.iter().map(|u| u.params.quantum.angles()), &weights, like.len());
    QuantumParams::new(like.qubits(), like.layers(), mean.into_iter().map(wrap).collect())
}

/// One FedAdam step: gradient `phi_t - phi_bar`, bias-corrected moments,
/// `phi_t - eta m_hat / (sqrt(v_hat) + eps)`, wrapped to `(-pi, pi]`.
pub fn fedadam_update(
    phi_t: &QuantumParams,
    phi_bar: &QuantumParams,
    state: &ServerOptimizerState,
    cfg: &AdamConfig,
) -> Result<(QuantumParams, ServerOptimizerState)> {
    if phi_t.len() != phi_bar.len() || state.len() != phi_t.len() {
        return param(format!(
            "FedAdam shapes differ: phi_t {}, phi_bar {}, state {}",
            phi_t.len(),
            phi_bar.len(),
            state.len()
        ));
    }
    if !(0.0..1.0).contains(&cfg.beta1) || !(0.0..1.0).contains(&cfg.beta2) || !(cfg.lr > 0.0) || !(cfg.eps > 0.0) {
        return param("FedAdam needs 0 <= beta < 1, eta > 0 and eps > 0");
    }
    let grad: Vec<f64> = phi_t.angles().iter().zip(phi_bar.angles()).map(|(a, b)| a - b).collect();
    let mut next = phi_t.clone();
    let mut state = state.clone();
    adam_step(next.angles_mut(), &grad, &mut state, cfg);
    next.angles_mut().iter_mut().for_each(|a| *a = wrap(*a));
    Ok((next, state))
}
