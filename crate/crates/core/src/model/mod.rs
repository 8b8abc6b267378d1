//! The hybrid model: a two-layer tanh MLP whose output angle-encodes a
//! variational RY/CNOT circuit read out through Pauli-Z expectations.

mod circuit;
mod hybrid;
mod mlp;
mod params;
mod train;

pub use circuit::{apply_gate, build_gates, circuit_forward, expectations_z, param_shift_grad, simulate, statevector, Gate};
pub use hybrid::{hybrid_loss_and_grads, softmax_cross_entropy, LossAndGrads};
pub use mlp::{mlp_backward, mlp_forward, MlpCache};
pub use params::{ClassicalParams, HybridParams, ModelDims, QuantumParams};
pub use train::{adam_local_step, local_train, predict, ClientUpdate, TrainConfig};
