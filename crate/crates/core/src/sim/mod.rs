//! Discrete-event simulation of requests flowing through the topology.

pub mod calibration;
mod engine;
mod model;
mod trace;

pub use engine::{run_simulation, Event, EventKind, SimConfig, SimOutcome, Simulator};
pub use model::{infer_time, quality_oracle};
pub use trace::{quality_by_category, summarize, trace_from_jsonl, trace_to_jsonl, TraceRecord};

#[cfg(test)]
mod tests;
