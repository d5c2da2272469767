//! Fitting the testbed to the two single-tier reference rows.
//!
//! Both reference routers run one request at a time, so their averages have
//! closed forms: cost is linear in price, response time is affine in the
//! inverse decode rate, and quality is a weighted mean of profile means.
//! Prices and decode rates are solved directly; quality means are shifted
//! by the residual until the simulated averages match.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::engine::{run_simulation, SimConfig};
use crate::domain::{
    generate_workload, InferenceRequest, WorkloadSpec, ModelKind, ModelSpec, NodeSpec, QualityProfile, RequestCategory, Tier, Topology,
};
use crate::error::{Error, Result};
use crate::metrics::{stable_mean, RouterSummary};
use crate::policy::Baseline;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub avg_quality: f64,
    pub avg_response_time: f64,
    pub avg_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    pub cloud_only: CalibrationTarget,
    pub edge_only: CalibrationTarget,
}

impl CalibrationTargets {
    /// Measured single-tier averages of the reference testbed.
    pub fn testbed() -> Self {
        CalibrationTargets {
            cloud_only: CalibrationTarget {
                avg_quality: 0.5736,
                avg_response_time: 1.0624,
                avg_cost: 1.13e-4,
            },
            edge_only: CalibrationTarget {
                avg_quality: 0.4207,
                avg_response_time: 3.9673,
                avg_cost: 9.00e-6,
            },
        }
    }
}

fn profile(means: [f64; 4], spread: f64) -> BTreeMap<RequestCategory, QualityProfile> {
    RequestCategory::DATASET
        .into_iter()
        .zip(means)
        .map(|(c, mean)| (c, QualityProfile { mean, spread }))
        .collect()
}

fn spec(id: &str, kind: ModelKind, means: [f64; 4], tier: Tier) -> ModelSpec {
    let (prefill_rate, decode_rate, base_overhead) = match tier {
        Tier::Cloud => (1500.0, 150.0, 0.15),
        Tier::Edge => (1000.0, 30.0, 0.09),
    };
    ModelSpec {
        id: id.into(),
        kind,
        price_per_million_tokens: 1.0,
        quality_profile: profile(means, 0.0),
        prefill_rate,
        decode_rate,
        base_overhead,
    }
}

fn site(id: &str, tier: Tier, models: &[&str]) -> NodeSpec {
    let (latency, max_concurrent, queue_limit) = match tier {
        Tier::Cloud => (0.05, 8, 64),
        Tier::Edge => (0.002, 1, 16),
    };
    NodeSpec {
        id: id.into(),
        tier,
        bandwidth_to_node: 12.5e6,
        bandwidth_from_node: 12.5e6,
        latency_to_node: latency,
        latency_from_node: latency,
        max_concurrent,
        queue_limit,
        deployed_models: models.iter().map(|m| m.to_string()).collect(),
        speed_multiplier: 1.0,
    }
}

/// Uncalibrated testbed: one cloud node with a large model, three edge nodes
/// each hosting a general, a code and a math small model.
///
/// Quality means are given per category in (code, math, reading,
/// commonsense) order; calibration only shifts them.
pub fn testbed_template() -> Topology {
    let models = vec![
        spec("gemma3:27b", ModelKind::Large, [0.60, 0.52, 0.86, 0.3144], Tier::Cloud),
        spec("qwen2.5:1.5b-instruct", ModelKind::Instruct, [0.545, 0.295, 0.5188, 0.3140], Tier::Edge),
        spec("qwen2.5-coder:1.5b-instruct", ModelKind::Coder, [0.55, 0.295, 0.515, 0.312], Tier::Edge),
        spec("qwen2.5-math:1.5b-instruct", ModelKind::Math, [0.54, 0.30, 0.515, 0.312], Tier::Edge),
    ];
    let edge = ["qwen2.5:1.5b-instruct", "qwen2.5-coder:1.5b-instruct", "qwen2.5-math:1.5b-instruct"];
    let nodes = vec![
        site("cloud-0", Tier::Cloud, &["gemma3:27b"]),
        site("edge-0", Tier::Edge, &edge),
        site("edge-1", Tier::Edge, &edge),
        site("edge-2", Tier::Edge, &edge),
    ];
    Topology::new(nodes, models).expect("template is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub topology: Topology,
    pub cloud_only: RouterSummary,
    pub edge_only: RouterSummary,
    /// Quality-shift rounds that were needed.
    pub rounds: usize,
}

fn single_tier(topology: &Topology, requests: &[InferenceRequest], baseline: Baseline, seed: u64) -> Result<RouterSummary> {
    let mut router = baseline.build(topology, seed)?;
    Ok(run_simulation(&SimConfig::closed(1, seed), topology, requests, &mut router)?.summary)
}

fn tier_models(topology: &Topology, tier: Tier) -> Vec<usize> {
    let mut ids: Vec<usize> = topology
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, n)| n.tier == tier)
        .flat_map(|(j, _)| topology.deployed(j).iter().copied())
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Mean over requests of `f(request)`.
fn mean_of(requests: &[InferenceRequest], f: impl Fn(&InferenceRequest) -> f64) -> Result<f64> {
    stable_mean(&requests.iter().map(f).collect::<Vec<_>>())
}

/// Fits prices, decode rates and quality means of `template` so that the
/// cloud-only and edge-only routers reproduce `targets` on `requests` at
/// concurrency 1.
///
/// All models of a tier share one price and one decode rate, and every
/// node of a tier must have the same link parameters; edge-only spreads
/// requests over several nodes, and the closed form needs them identical.
pub fn calibrate(
    template: &Topology,
    requests: &[InferenceRequest],
    targets: &CalibrationTargets,
    seed: u64,
) -> Result<CalibrationReport> {
    if requests.is_empty() {
        return Err(Error::Domain("calibration needs a workload".into()));
    }
    let mut models = template.models().to_vec();
    let nodes = template.nodes().to_vec();
    let mean_tokens = mean_of(requests, |r| r.total_tokens() as f64)?;
    let mean_prompt = mean_of(requests, |r| f64::from(r.prompt_tokens))?;
    let mean_response = mean_of(requests, |r| f64::from(r.expected_response_tokens))?;

    for (tier, target) in [(Tier::Cloud, targets.cloud_only), (Tier::Edge, targets.edge_only)] {
        let ids = tier_models(template, tier);
        let node = nodes
            .iter()
            .find(|n| n.tier == tier)
            .ok_or_else(|| Error::Config(format!("template has no {tier:?} node")))?;
        if nodes.iter().any(|n| n.tier == tier && !same_link(n, node)) {
            return Err(Error::Config(format!("{tier:?} nodes differ in link or speed parameters")));
        }
        let first = &models[ids[0]];
        if ids.iter().any(|&m| {
            models[m].prefill_rate != first.prefill_rate || models[m].base_overhead != first.base_overhead
        }) {
            return Err(Error::Config(format!("{tier:?} models differ in prefill or overhead")));
        }

        let price = target.avg_cost * 1e6 / mean_tokens;
        let transfer = mean_of(requests, |r| {
            r.query_size_bytes as f64 / node.bandwidth_to_node
                + node.latency_to_node
                + r.response_size_bytes as f64 / node.bandwidth_from_node
                + node.latency_from_node
        })?;
        let m = node.speed_multiplier;
        let decode_budget = target.avg_response_time
            - transfer
            - first.base_overhead
            - mean_prompt / (first.prefill_rate * m);
        if !(decode_budget > 0.0) {
            return Err(Error::Config(format!(
                "{tier:?} target response time {} is below the fixed terms",
                target.avg_response_time
            )));
        }
        let decode_rate = mean_response / (decode_budget * m);
        for &id in &ids {
            models[id].price_per_million_tokens = price;
            models[id].decode_rate = decode_rate;
        }
    }

    let mut topology = Topology::new(nodes.clone(), models.clone())?;
    let mut rounds = 0;
    loop {
        let cloud = single_tier(&topology, requests, Baseline::CloudOnly, seed)?;
        let edge = single_tier(&topology, requests, Baseline::EdgeOnly, seed)?;
        let dq_cloud = targets.cloud_only.avg_quality - cloud.avg_quality;
        let dq_edge = targets.edge_only.avg_quality - edge.avg_quality;
        if (dq_cloud.abs() < 1e-9 && dq_edge.abs() < 1e-9) || rounds == 20 {
            return Ok(CalibrationReport {
                topology,
                cloud_only: cloud,
                edge_only: edge,
                rounds,
            });
        }
        for (tier, dq) in [(Tier::Cloud, dq_cloud), (Tier::Edge, dq_edge)] {
            for id in tier_models(&topology, tier) {
                for p in models[id].quality_profile.values_mut() {
                    p.mean = (p.mean + dq).clamp(0.0, 1.0);
                }
            }
        }
        topology = Topology::new(nodes.clone(), models.clone())?;
        rounds += 1;
    }
}

fn same_link(a: &NodeSpec, b: &NodeSpec) -> bool {
    a.bandwidth_to_node == b.bandwidth_to_node
        && a.bandwidth_from_node == b.bandwidth_from_node
        && a.latency_to_node == b.latency_to_node
        && a.latency_from_node == b.latency_from_node
        && a.speed_multiplier == b.speed_multiplier
}

/// Seed the checked-in testbed workload is generated and calibrated with.
pub const TESTBED_SEED: u64 = 42;

/// The 500-request round-robin workload of the testbed. Its seed is left
/// unset so each experiment seed draws its own token lengths.
pub fn testbed_workload() -> WorkloadSpec {
    WorkloadSpec {
        seed: None,
        ..WorkloadSpec::balanced(125, TESTBED_SEED)
    }
}

/// Calibrates [`testbed_template`] on the testbed workload drawn with
/// [`TESTBED_SEED`].
pub fn calibrate_testbed() -> Result<CalibrationReport> {
    let requests = generate_workload(&testbed_workload(), TESTBED_SEED)?;
    calibrate(&testbed_template(), &requests, &CalibrationTargets::testbed(), TESTBED_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn testbed_fit_hits_targets() {
        let report = calibrate_testbed().unwrap();
        let t = CalibrationTargets::testbed();
        for (got, want) in [(&report.cloud_only, t.cloud_only), (&report.edge_only, t.edge_only)] {
            assert!((got.avg_quality - want.avg_quality).abs() < 1e-9);
            assert!((got.avg_response_time - want.avg_response_time).abs() < 1e-9 * want.avg_response_time);
            assert!((got.avg_cost - want.avg_cost).abs() < 1e-9 * want.avg_cost);
        }
    }

    #[test]
    fn tier_price_is_cost_over_mean_tokens() {
        let requests = generate_workload(&testbed_workload(), TESTBED_SEED).unwrap();
        let mean_tokens = requests.iter().map(|r| r.total_tokens() as f64).sum::<f64>() / requests.len() as f64;
        let report = calibrate_testbed().unwrap();
        for m in report.topology.models() {
            let want = if m.kind == ModelKind::Large { 1.13e-4 } else { 9.00e-6 } * 1e6 / mean_tokens;
            assert!((m.price_per_million_tokens - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn unreachable_response_time_is_rejected() {
        let requests = generate_workload(&testbed_workload(), TESTBED_SEED).unwrap();
        let mut targets = CalibrationTargets::testbed();
        targets.cloud_only.avg_response_time = 0.01;
        assert!(matches!(calibrate(&testbed_template(), &requests, &targets, 0), Err(Error::Config(_))));
        assert!(calibrate(&testbed_template(), &[], &targets, 0).is_err());
    }
}
