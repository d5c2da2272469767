use rand_distr::{Beta, Distribution};

use crate::domain::{InferenceRequest, ModelSpec, NodeSpec};
use crate::rng::{self, tag};

/// Seconds of compute for `request`: fixed overhead plus prefill over the
/// prompt and decode over the response, both scaled by the node's speed.
pub fn infer_time(request: &InferenceRequest, model: &ModelSpec, node: &NodeSpec) -> f64 {
    let m = node.speed_multiplier;
    model.base_overhead
        + f64::from(request.prompt_tokens) / (model.prefill_rate * m)
        + f64::from(request.expected_response_tokens) / (model.decode_rate * m)
}

/// Quality score of `model` answering `request`.
///
/// Draws from a beta law with the profile's mean and standard deviation;
/// reproducible per `(seed, request id, model id)`. Zero spread, or a mean
/// at either end of the interval, returns the mean itself.
pub fn quality_oracle(request: &InferenceRequest, model: &ModelSpec, seed: u64) -> f64 {
    let profile = model.quality_profile[&request.category];
    let (m, s) = (profile.mean, profile.spread);
    if s == 0.0 || m <= 0.0 || m >= 1.0 {
        return m;
    }
    let nu = m * (1.0 - m) / (s * s) - 1.0;
    let beta = Beta::new(m * nu, (1.0 - m) * nu).expect("spread validated with the topology");
    let mut r = rng::stream(&[seed, tag::QUALITY, request.id, rng::hash_str(&model.id)]);
    beta.sample(&mut r).clamp(0.0, 1.0)
}
