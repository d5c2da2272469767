use std::collections::BTreeMap;

use crate::domain::{
    InferenceRequest, ModelKind, ModelSpec, NodeSpec, QualityProfile, RequestCategory, Tier, Topology,
};

pub fn model(id: &str, kind: ModelKind) -> ModelSpec {
    let quality_profile: BTreeMap<_, _> = RequestCategory::DATASET
        .into_iter()
        .map(|c| (c, QualityProfile { mean: 0.5, spread: 0.0 }))
        .collect();
    ModelSpec {
        id: id.into(),
        kind,
        price_per_million_tokens: 0.1,
        quality_profile,
        prefill_rate: 100.0,
        decode_rate: 10.0,
        base_overhead: 0.0,
    }
}

pub fn node(id: &str, tier: Tier, models: &[&str]) -> NodeSpec {
    NodeSpec {
        id: id.into(),
        tier,
        bandwidth_to_node: 1e6,
        bandwidth_from_node: 1e6,
        latency_to_node: 0.01,
        latency_from_node: 0.01,
        max_concurrent: 1,
        queue_limit: 4,
        deployed_models: models.iter().map(|s| s.to_string()).collect(),
        speed_multiplier: 1.0,
    }
}

/// One cloud node with the large model and three edge nodes hosting the
/// three small models each.
pub fn testbed() -> Topology {
    let models = vec![
        model("large", ModelKind::Large),
        model("instruct", ModelKind::Instruct),
        model("coder", ModelKind::Coder),
        model("math", ModelKind::Math),
    ];
    let edge = ["instruct", "coder", "math"];
    let nodes = vec![
        node("cloud-0", Tier::Cloud, &["large"]),
        node("edge-0", Tier::Edge, &edge),
        node("edge-1", Tier::Edge, &edge),
        node("edge-2", Tier::Edge, &edge),
    ];
    Topology::new(nodes, models).unwrap()
}

pub fn request(id: u64, category: RequestCategory, prompt: u32, response: u32) -> InferenceRequest {
    InferenceRequest {
        id,
        category,
        prompt_tokens: prompt,
        expected_response_tokens: response,
        query_size_bytes: 4 * u64::from(prompt),
        response_size_bytes: 4 * u64::from(response),
        sentence_count: prompt.div_ceil(20).max(1),
        has_output_constraint: false,
        arrival_time: 0.0,
    }
}
