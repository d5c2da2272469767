use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::RequestCategory;
use crate::error::{Error, Result};
use crate::metrics::{
    inference_cost_metric, response_quality_metric, response_time_metric, stable_mean, ObjectiveVector,
    RouterSummary, RtBreakdown,
};
use crate::policy::DecisionReason;

/// One served request. Field order follows the per-request log layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub dataset: RequestCategory,
    pub global_index: u64,
    pub assigned_model: String,
    pub node_id: String,
    pub quality: f64,
    pub response_time: f64,
    pub cost: f64,
    /// Billable tokens and the price they were billed at.
    pub total_tokens: u64,
    pub price_per_million_tokens: f64,
    pub inference_time: f64,
    pub uplink: f64,
    pub queue_wait: f64,
    pub downlink: f64,
    pub reason: DecisionReason,
    /// The router's choice was full and the request went to the cloud instead.
    pub redirected: bool,
    pub admitted_at: f64,
    pub finished_at: f64,
}

impl TraceRecord {
    pub fn breakdown(&self) -> RtBreakdown {
        RtBreakdown::new(self.uplink, self.queue_wait, self.inference_time, self.downlink)
    }
}

pub fn trace_to_jsonl(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
        out.push('\n');
    }
    out
}

pub fn trace_from_jsonl(text: &str) -> Result<Vec<TraceRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::schema(format!("trace line {}", i + 1), e.to_string()))
        })
        .collect()
}

/// Aggregates a trace into the router summary and its objective vector.
pub fn summarize(router_name: &str, trace: &[TraceRecord]) -> Result<(RouterSummary, ObjectiveVector)> {
    let qualities: Vec<f64> = trace.iter().map(|r| r.quality).collect();
    let billing: Vec<(u64, f64)> = trace
        .iter()
        .map(|r| (r.total_tokens, r.price_per_million_tokens))
        .collect();
    let breakdowns: Vec<RtBreakdown> = trace.iter().map(TraceRecord::breakdown).collect();

    let rq = response_quality_metric(&qualities)?;
    let cost = inference_cost_metric(&billing)?;
    let rt = response_time_metric(&breakdowns)?;
    let summary = RouterSummary::new(router_name, stable_mean(&qualities)?, rt, cost);
    Ok((summary, ObjectiveVector::new(rq, cost, rt)))
}

/// Mean quality per dataset category, skipping categories without requests.
pub fn quality_by_category(trace: &[TraceRecord]) -> BTreeMap<RequestCategory, f64> {
    let mut groups: BTreeMap<RequestCategory, Vec<f64>> = BTreeMap::new();
    for r in trace {
        groups.entry(r.dataset).or_default().push(r.quality);
    }
    groups
        .into_iter()
        .map(|(c, q)| (c, stable_mean(&q).expect("groups are nonempty")))
        .collect()
}
