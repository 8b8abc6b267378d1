//! Single-process simulator of clustered hybrid classical-quantum federated
//! learning with circular-mean aggregation of quantum angles.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod clustering;
pub mod data;
pub mod model;
pub mod numeric;
pub mod optim;
pub mod orchestrator;
pub mod rng;

mod error;

pub use error::{Error, Result};
