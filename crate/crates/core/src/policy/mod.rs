//! Request features, the threshold router and the baseline strategies.

mod document;
mod features;
mod router;

pub use document::PolicyDocument;
pub use features::{classify_task, complexity_score, ClassifierConfig, ComplexityConfig};
pub use router::{
    decide, extract_features, route_assignment, route_threshold, AssignmentRouter, Baseline,
    BaselineRouter, DecisionReason, FeatureVector, Router, RoutingDecision, SystemState,
    ThresholdContext, ThresholdRouter,
};
