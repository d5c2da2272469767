//! Requests, nodes, models and synthetic workloads.

mod topology;
mod types;
mod workload;

pub use topology::{load_topology, read_topology, save_topology, NodePair, Topology};
pub use types::{
    InferenceRequest, ModelKind, ModelSpec, NodeSpec, QualityProfile, RequestCategory, Tier,
};
pub use workload::{
    generate_workload, ArrivalProcess, LengthDistribution, Ordering, WorkloadSpec,
};
