//! Queue-channel capacity toolkit.
//!
//! Symbols (qubits) wait in a FCFS single-server queue and decohere while they
//! wait: a symbol that waited `w` time units is erased or depolarized with
//! probability `p(w)`. This crate simulates such queues, evaluates the
//! closed-form classical capacities of the resulting queue-channels, checks
//! them by Monte Carlo, and runs random-linear-code experiments over the
//! induced erasure channel.
//!
//! Time is measured in units of the mean service time (service rate 1), and
//! every capacity is reported in bits per unit time.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitmatrix;
pub mod capacity;
pub mod coding;
pub mod decoherence;
pub mod distributions;
pub mod entropy;
mod error;
pub mod estimator;
pub mod format;
pub mod optimizer;
pub mod quadrature;
pub mod queue_sim;
pub mod rng;
pub mod stats;

pub use capacity::{CapacityEstimate, Context, MG1Params, Method};
pub use decoherence::{DecoherenceModel, NoiseKind, PMap, SymbolStream};
pub use distributions::DistributionSpec;
pub use error::{Error, Result};
pub use estimator::{Functional, McCapacity, MomentRequest};
pub use queue_sim::{EventTrace, QueueConfig, WaitingConvention};
pub use stats::MeanEstimate;
