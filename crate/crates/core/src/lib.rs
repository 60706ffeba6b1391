//! Particle-optimization samplers built on Wasserstein gradient flows.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! - [`targets`]: unnormalized log-densities `U(θ)` with exact and minibatch gradients
//! - [`kernels`]: the RBF kernel and the median bandwidth heuristic
//! - [`transport`]: log-domain Sinkhorn and an exhaustive permutation oracle
//! - [`samplers`]: SGLD, SVGD, w-SGLD, w-SGLD-B, π-SGLD and the unified dispatcher
//! - [`diagnostics`]: MMD, moment errors, mode coverage, Stein and gradient checks
//!
//! File formats, configuration and the command line live in the `partopt` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod config;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod init;
pub mod kernels;
pub mod linalg;
pub mod rng;
pub mod samplers;
pub mod targets;
pub mod transport;

pub use config::{BandwidthPolicy, Minibatch, SamplerConfig, StepSchedule, TransportMode};
pub use ensemble::ParticleEnsemble;
pub use error::{Error, Result};
pub use kernels::RbfKernel;
pub use linalg::Matrix;
pub use rng::RngStream;
pub use samplers::{Sampler, SamplerKind};
pub use targets::Target;
