//! Simulation and verification of the giant component of random
//! d-uniform hypergraphs `G^d(N, p)` with `p = λ (d-2)! / N^(d-1)`.
//!
//! - [`theory`]: fixed points, variance constant and rate functions.
//! - [`sampler`] and [`hypergraph`]: exact sampling and the `HGR v1` format.
//! - [`components`]: union-find component sizes.
//! - [`exploration`]: the exploration process in graph and streaming form,
//!   with its martingale decomposition.
//! - [`montecarlo`]: replicated experiments and their reports.

// `!(x > 0.0)` is used on purpose so NaN is rejected with the bad value.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod components;
pub mod error;
pub mod exploration;
pub mod format;
pub mod hypergraph;
pub mod montecarlo;
pub mod rng;
pub mod sampler;
pub mod theory;

pub use error::{Error, Result};
pub use hypergraph::Hypergraph;
pub use rng::RngStream;
pub use theory::{ModelParams, TheoryConstants};
