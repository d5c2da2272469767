//! Multi-objective routing of LLM inference requests across a simulated
//! cloud-edge topology.
//!
//! The crate is organized around the pipeline it implements:
//!
//! ```text
//! domain ──▶ policy ──▶ sim ──▶ metrics
//!              ▲                  │
//!              └────── moo ◀──────┘
//! ```
//!
//! - [`domain`] holds requests, nodes, models and synthetic workload generation.
//! - [`metrics`] computes response quality, inference cost and response time
//!   objectives plus the cross-router composite score.
//! - [`moo`] is a generic NSGA-II engine with two routing genome encodings.
//! - [`policy`] contains the runtime threshold router and the baseline routers.
//! - [`sim`] is a deterministic discrete-event simulator producing per-request traces.
//! - [`cli`] wires everything into the `optimize`, `simulate`, `compare` and
//!   `report` commands driven by an experiment manifest.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod domain;
pub mod error;
pub mod metrics;
pub mod moo;
pub mod policy;
pub mod rng;
pub mod sim;
#[cfg(test)]
mod test_support;

pub use error::{Error, Result};

/// Version written into every structured document this crate produces.
pub const SCHEMA_VERSION: u32 = 1;
