//! Random streams, distribution samplers and finite-difference oracles.

mod dist;
mod fd;
mod rng;

pub use dist::{sample_categorical, sample_dirichlet, sample_gamma, SimplexVector, SIMPLEX_TOL};
pub use fd::{fd_grad_oracle, fd_hvp_oracle};
pub use rng::{make_rng_stream, RngStream};

/// Stream labels used to derive the independent streams of one experiment.
///
/// A stream is `make_rng_stream(seed, &[COMPONENT, ...])`; the remaining labels
/// are round and client indices where they apply.
pub mod labels {
    pub const DATA: u64 = 1;
    pub const PARTITION: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const INIT: u64 = 4;
    pub const SELECT: u64 = 5;
    pub const LOCAL_TRAIN: u64 = 6;
    pub const DIRECTIONS: u64 = 7;
}
