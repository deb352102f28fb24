//! Evolutionary approximation of popcount circuits and their integration into
//! bespoke ternary neural network netlists.
//!
//! The flow has three phases:
//!
//! 1. [`popcount`]: exact and truncated popcount (PC) generators plus a
//!    (1+λ) CGP search that shrinks them under an error constraint.
//! 2. [`pcc`]: popcount-compare (PCC) circuits assembled from PC pairs, scored
//!    with the distance error and filtered to a Pareto library.
//! 3. [`integrator`]: NSGA-II over one component choice per neuron, trading
//!    area against classification accuracy.
//!
//! [`circuit`] holds the netlist substrate, [`metrics`] every error measure,
//! [`tnn`] the ternary network model and netlist generator, and [`pipeline`]
//! the end-to-end driver.

pub mod circuit;
pub mod error;
pub mod integrator;
pub mod metrics;
pub mod pareto;
pub mod pcc;
pub mod pipeline;
pub mod popcount;
pub mod tnn;
mod util;

pub use error::{Error, Result};
