//! Core of the fedsim federated-learning simulator.
//!
//! The crate is layered bottom-up:
//!
//! * [`numkit`] deterministic random streams, samplers and finite-difference
//!   oracles;
//! * [`models`] differentiable classifiers (multinomial logistic regression and
//!   a ReLU MLP) with loss, gradient, Hessian-vector product and accuracy;
//! * [`datakit`] datasets and the IID / Dirichlet / sort-and-shard client
//!   partitioners;
//! * [`fedcore`] FedAvg and Per-FedAvg (Hessian and first-order forms), client
//!   selection, aggregation, personalization and evaluation.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datakit;
mod error;
pub mod fedcore;
pub mod models;
pub mod numkit;

pub use error::{Error, Result};
