//! Stochastic runtime models for bulk-synchronous (barrier) and pipelined
//! iterative solvers.
//!
//! The crate turns per-iteration, per-process timing traces into runtime
//! predictions: fit a distribution to iteration compute times, then the
//! expected cost of a barrier-synchronized iteration is the expected maximum
//! across processes, while a pipelined iteration costs the mean. Everything
//! stochastic is seeded and deterministic.

pub mod dist;
pub mod model;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod trace;

mod numeric;
mod opt;

pub use dist::{DistError, DistSpec, JohnsonSuFit};
pub use rng::RandomStream;
