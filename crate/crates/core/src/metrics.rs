//! Objective metrics, scalarization and the cross-router composite score.
//!
//! All three objectives are minimized: `rq` is the mean quality shortfall,
//! `cost` the mean USD per request and `rt` the mean end-to-end seconds.

use serde::{Deserialize, Serialize};

use crate::domain::{InferenceRequest, NodeSpec};
use crate::error::{Error, Result};

/// Compensated (Neumaier) summation.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn stable_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("mean of an empty list".into()));
    }
    Ok(stable_sum(values.iter().copied()) / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub rq: f64,
    pub cost: f64,
    pub rt: f64,
}

impl ObjectiveVector {
    pub const fn new(rq: f64, cost: f64, rt: f64) -> Self {
        ObjectiveVector { rq, cost, rt }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rq, self.cost, self.rt]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        ObjectiveVector::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Objective weights; always sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct Weights {
    quality: f64,
    cost: f64,
    time: f64,
}

#[derive(Serialize, Deserialize)]
struct RawWeights {
    w_quality: f64,
    w_cost: f64,
    w_time: f64,
}

impl TryFrom<RawWeights> for Weights {
    type Error = Error;

    fn try_from(raw: RawWeights) -> Result<Self> {
        Weights::new(raw.w_quality, raw.w_cost, raw.w_time)
    }
}

impl From<Weights> for RawWeights {
    fn from(w: Weights) -> Self {
        RawWeights {
            w_quality: w.quality,
            w_cost: w.cost,
            w_time: w.time,
        }
    }
}

impl Weights {
    pub fn new(quality: f64, cost: f64, time: f64) -> Result<Self> {
        for w in [quality, cost, time] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Domain(format!("weight {w} outside [0, 1]")));
            }
        }
        let sum = quality + cost + time;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Weights { quality, cost, time })
    }

    pub fn equal() -> Self {
        Weights {
            quality: 1.0 / 3.0,
            cost: 1.0 / 3.0,
            time: 1.0 / 3.0,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.quality, self.cost, self.time]
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::equal()
    }
}

/// Per-request response time split into its transfer, wait and compute terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtBreakdown {
    pub uplink: f64,
    pub queue_wait: f64,
    pub infer: f64,
    pub downlink: f64,
    pub total: f64,
}

impl RtBreakdown {
    pub fn new(uplink: f64, queue_wait: f64, infer: f64, downlink: f64) -> Self {
        RtBreakdown {
            uplink,
            queue_wait,
            infer,
            downlink,
            total: uplink + queue_wait + infer + downlink,
        }
    }

    /// Response time without the queueing term.
    pub fn without_wait(&self) -> f64 {
        self.total - self.queue_wait
    }
}

/// Mean quality shortfall `1 - q` over all requests.
///
/// Computed as one minus the compensated mean quality, which is algebraically
/// the mean of `1 - q_i` and keeps `rq + mean(q) == 1` exact in floating point.
pub fn response_quality_metric(qualities: &[f64]) -> Result<f64> {
    if qualities.is_empty() {
        return Err(Error::Domain("response quality needs at least one request".into()));
    }
    if let Some(q) = qualities.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::Domain(format!("quality {q} outside [0, 1]")));
    }
    Ok(1.0 - stable_mean(qualities)?)
}

/// Mean cost per request from `(total_tokens, usd_per_million_tokens)` pairs.
pub fn inference_cost_metric(per_request: &[(u64, f64)]) -> Result<f64> {
    if per_request.is_empty() {
        return Err(Error::Domain("inference cost needs at least one request".into()));
    }
    if let Some((_, p)) = per_request.iter().find(|(_, p)| !(*p >= 0.0)) {
        return Err(Error::Domain(format!("negative price {p}")));
    }
    let costs: Vec<f64> = per_request.iter().map(|&(l, p)| request_cost(l, p)).collect();
    stable_mean(&costs)
}

/// USD billed for `tokens` at `price_per_million`.
pub fn request_cost(tokens: u64, price_per_million: f64) -> f64 {
    tokens as f64 / 1e6 * price_per_million
}

/// Response time of one request on `node`: uplink transfer, queue wait,
/// inference, and downlink transfer.
pub fn response_time_i(
    request: &InferenceRequest,
    node: &NodeSpec,
    t_infer: f64,
    queue_wait: f64,
) -> Result<RtBreakdown> {
    if !(node.bandwidth_to_node > 0.0 && node.bandwidth_from_node > 0.0) {
        return Err(Error::Domain(format!("node `{}` has non-positive bandwidth", node.id)));
    }
    if !(t_infer >= 0.0 && t_infer.is_finite() && queue_wait >= 0.0 && queue_wait.is_finite()) {
        return Err(Error::Domain(format!(
            "inference time {t_infer} / queue wait {queue_wait} must be finite and >= 0"
        )));
    }
    let uplink = request.query_size_bytes as f64 / node.bandwidth_to_node + node.latency_to_node;
    let downlink =
        request.response_size_bytes as f64 / node.bandwidth_from_node + node.latency_from_node;
    Ok(RtBreakdown::new(uplink, queue_wait, t_infer, downlink))
}

pub fn response_time_metric(breakdowns: &[RtBreakdown]) -> Result<f64> {
    if breakdowns.is_empty() {
        return Err(Error::Domain("response time needs at least one request".into()));
    }
    let totals: Vec<f64> = breakdowns.iter().map(|b| b.total).collect();
    stable_mean(&totals)
}

/// Weighted sum of (already normalized) objectives; lower is better.
pub fn scalarize(objectives: &ObjectiveVector, weights: &Weights) -> f64 {
    let o = objectives.as_array();
    let w = weights.as_array();
    w[0] * o[0] + w[1] * o[1] + w[2] * o[2]
}

/// Min-max normalizes each objective over `points` into `[0, 1]`, lower
/// still better. A column with no spread maps to 0.
pub fn normalize_objectives(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for (k, v) in p.as_array().into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    points
        .iter()
        .map(|p| {
            let a = p.as_array();
            ObjectiveVector::from_array(std::array::from_fn(|k| {
                let range = hi[k] - lo[k];
                if range > 0.0 {
                    (a[k] - lo[k]) / range
                } else {
                    0.0
                }
            }))
        })
        .collect()
}

/// One row of a router comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterSummary {
    pub router_name: String,
    pub avg_quality: f64,
    pub avg_response_time: f64,
    pub avg_cost: f64,
    pub overall: Option<f64>,
}

impl RouterSummary {
    pub fn new(name: impl Into<String>, avg_quality: f64, avg_response_time: f64, avg_cost: f64) -> Self {
        RouterSummary {
            router_name: name.into(),
            avg_quality,
            avg_response_time,
            avg_cost,
            overall: None,
        }
    }

    /// The same summary as a minimized objective triple.
    pub fn objectives(&self) -> ObjectiveVector {
        ObjectiveVector::new(1.0 - self.avg_quality, self.avg_cost, self.avg_response_time)
    }
}

/// Fills `overall` with the mean of min-max normalized quality, time and
/// cost, each oriented so that larger is better. A metric with no spread
/// scores 1.0 for everyone.
pub fn overall_scores(summaries: &[RouterSummary]) -> Result<Vec<RouterSummary>> {
    if summaries.len() < 2 {
        return Err(Error::Domain(
            "overall score needs at least two routers to normalize against".into(),
        ));
    }
    let column = |f: fn(&RouterSummary) -> f64| {
        let values: Vec<f64> = summaries.iter().map(f).collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (values, lo, hi)
    };
    let (q, q_lo, q_hi) = column(|s| s.avg_quality);
    let (t, t_lo, t_hi) = column(|s| s.avg_response_time);
    let (c, c_lo, c_hi) = column(|s| s.avg_cost);

    let ascending = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
    let descending = |v: f64, lo: f64, hi: f64| if hi > lo { (hi - v) / (hi - lo) } else { 1.0 };

    Ok(summaries
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let parts = ascending(q[i], q_lo, q_hi)
                + descending(t[i], t_lo, t_hi)
                + descending(c[i], c_lo, c_hi);
            RouterSummary {
                overall: Some(parts / 3.0),
                ..s.clone()
            }
        })
        .collect())
}

pub const SUMMARY_CSV_HEADER: &str = "router,avg_quality,avg_response_time,avg_cost,overall";

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn summaries_to_csv(summaries: &[RouterSummary]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.router_name,
            fmt_f64(s.avg_quality),
            fmt_f64(s.avg_response_time),
            fmt_f64(s.avg_cost),
            s.overall.map(fmt_f64).unwrap_or_default()
        ));
    }
    out
}

pub fn summaries_from_csv(text: &str) -> Result<Vec<RouterSummary>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_CSV_HEADER) {
        return Err(Error::schema("header", format!("expected `{SUMMARY_CSV_HEADER}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            let row = format!("row {}", i + 1);
            if fields.len() != 5 {
                return Err(Error::schema(row, "expected 5 fields"));
            }
            let num = |k: usize| {
                fields[k]
                    .parse::<f64>()
                    .map_err(|e| Error::schema(format!("{row}.{k}"), e.to_string()))
            };
            Ok(RouterSummary {
                router_name: fields[0].to_string(),
                avg_quality: num(1)?,
                avg_response_time: num(2)?,
                avg_cost: num(3)?,
                overall: if fields[4].is_empty() { None } else { Some(num(4)?) },
            })
        })
        .collect()
}
