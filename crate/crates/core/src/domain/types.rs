use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Task family of a request. The first four mirror the benchmark mixes a
/// router sees in practice; `General` is only ever produced by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestCategory {
    Code,
    Math,
    Reading,
    Commonsense,
    General,
}

impl RequestCategory {
    /// Categories a generated request can carry.
    pub const DATASET: [RequestCategory; 4] = [
        RequestCategory::Code,
        RequestCategory::Math,
        RequestCategory::Reading,
        RequestCategory::Commonsense,
    ];

    pub const ALL: [RequestCategory; 5] = [
        RequestCategory::Code,
        RequestCategory::Math,
        RequestCategory::Reading,
        RequestCategory::Commonsense,
        RequestCategory::General,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RequestCategory::Code => "code",
            RequestCategory::Math => "math",
            RequestCategory::Reading => "reading",
            RequestCategory::Commonsense => "commonsense",
            RequestCategory::General => "general",
        }
    }

    /// Edge model kind that specializes in this category.
    pub fn specialist_kind(self) -> ModelKind {
        match self {
            RequestCategory::Code => ModelKind::Coder,
            RequestCategory::Math => ModelKind::Math,
            _ => ModelKind::Instruct,
        }
    }
}

impl fmt::Display for RequestCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RequestCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RequestCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

/// One inference request. Token counts come from the workload generator;
/// byte sizes are derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRequest {
    pub id: u64,
    pub category: RequestCategory,
    pub prompt_tokens: u32,
    pub expected_response_tokens: u32,
    pub query_size_bytes: u64,
    pub response_size_bytes: u64,
    pub sentence_count: u32,
    pub has_output_constraint: bool,
    pub arrival_time: f64,
}

impl InferenceRequest {
    /// Prompt plus response tokens, the billable length.
    pub fn total_tokens(&self) -> u64 {
        u64::from(self.prompt_tokens) + u64::from(self.expected_response_tokens)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Instruct,
    Coder,
    Math,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityProfile {
    pub mean: f64,
    /// Standard deviation of the per-request quality draw; 0 is deterministic.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: String,
    pub kind: ModelKind,
    /// USD per million tokens.
    pub price_per_million_tokens: f64,
    pub quality_profile: BTreeMap<RequestCategory, QualityProfile>,
    /// Prompt tokens per second.
    pub prefill_rate: f64,
    /// Generated tokens per second.
    pub decode_rate: f64,
    #[serde(default)]
    pub base_overhead: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Cloud,
    Edge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub tier: Tier,
    /// Router to node, bytes per second.
    pub bandwidth_to_node: f64,
    /// Node to router, bytes per second.
    pub bandwidth_from_node: f64,
    pub latency_to_node: f64,
    pub latency_from_node: f64,
    /// Parallel inference slots.
    pub max_concurrent: u32,
    /// Requests allowed to wait beyond the busy slots.
    pub queue_limit: u32,
    pub deployed_models: Vec<String>,
    #[serde(default = "one")]
    pub speed_multiplier: f64,
}

fn one() -> f64 {
    1.0
}
