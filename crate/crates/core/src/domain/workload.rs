use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use super::types::{InferenceRequest, RequestCategory};
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Cycle through `category_order`, skipping exhausted categories.
    RoundRobin,
    Shuffled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalProcess {
    /// Fixed number of requests in flight; arrival times are assigned by the simulator.
    ClosedLoop { concurrency: u32 },
    /// Poisson arrivals at `rate` requests per second.
    Open { rate: f64 },
}

/// Per-category lognormal token lengths plus the prompt-shape parameters the
/// complexity features read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthDistribution {
    pub prompt_median: f64,
    pub prompt_sigma: f64,
    pub response_median: f64,
    pub response_sigma: f64,
    /// Average prompt tokens per sentence.
    pub tokens_per_sentence: f64,
    /// Probability that the prompt carries an explicit output constraint.
    pub constraint_probability: f64,
}

impl LengthDistribution {
    /// Stand-in defaults: reading has long contexts and short answers, math
    /// long worked solutions, commonsense picks one short ending.
    pub fn default_for(category: RequestCategory) -> Self {
        let (prompt_median, response_median, tokens_per_sentence, constraint_probability) =
            match category {
                RequestCategory::Code => (150.0, 200.0, 25.0, 0.6),
                RequestCategory::Math => (120.0, 250.0, 20.0, 0.3),
                RequestCategory::Reading => (300.0, 30.0, 22.0, 0.2),
                RequestCategory::Commonsense | RequestCategory::General => {
                    (100.0, 5.0, 30.0, 0.1)
                }
            };
        LengthDistribution {
            prompt_median,
            prompt_sigma: 0.4,
            response_median,
            response_sigma: 0.4,
            tokens_per_sentence,
            constraint_probability,
        }
    }
}

fn default_category_order() -> Vec<RequestCategory> {
    // code, math, commonsense, reading: the MBPP, GSM8K, HellaSwag, SQuAD cycle
    vec![
        RequestCategory::Code,
        RequestCategory::Math,
        RequestCategory::Commonsense,
        RequestCategory::Reading,
    ]
}

fn default_token_lengths() -> BTreeMap<RequestCategory, LengthDistribution> {
    RequestCategory::DATASET
        .into_iter()
        .map(|c| (c, LengthDistribution::default_for(c)))
        .collect()
}

fn default_bytes_per_token() -> f64 {
    4.0
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_arrival() -> ArrivalProcess {
    ArrivalProcess::ClosedLoop { concurrency: 1 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub total_requests: u32,
    pub per_category_counts: BTreeMap<RequestCategory, u32>,
    pub ordering: Ordering,
    #[serde(default = "default_category_order")]
    pub category_order: Vec<RequestCategory>,
    #[serde(default = "default_arrival")]
    pub arrival_process: ArrivalProcess,
    #[serde(default = "default_token_lengths")]
    pub token_lengths: BTreeMap<RequestCategory, LengthDistribution>,
    #[serde(default = "default_bytes_per_token")]
    pub bytes_per_token: f64,
    /// Falls back to the experiment seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl WorkloadSpec {
    /// Balanced round-robin workload with default length distributions.
    pub fn balanced(per_category: u32, seed: u64) -> Self {
        WorkloadSpec {
            schema_version: SCHEMA_VERSION,
            total_requests: per_category * 4,
            per_category_counts: RequestCategory::DATASET
                .into_iter()
                .map(|c| (c, per_category))
                .collect(),
            ordering: Ordering::RoundRobin,
            category_order: default_category_order(),
            arrival_process: default_arrival(),
            token_lengths: default_token_lengths(),
            bytes_per_token: default_bytes_per_token(),
            seed: Some(seed),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: WorkloadSpec = serde_json::from_str(text).map_err(|e| {
            Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        if spec.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("unsupported version {}", spec.schema_version),
            ));
        }
        Ok(spec)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("workload spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_category_counts.contains_key(&RequestCategory::General) {
            return Err(Error::validation(
                "per_category_counts.general",
                "`general` is a classifier output, not a workload category",
            ));
        }
        let sum: u64 = self.per_category_counts.values().map(|&c| u64::from(c)).sum();
        if sum != u64::from(self.total_requests) {
            return Err(Error::validation(
                "per_category_counts",
                format!("counts sum to {sum}, total_requests is {}", self.total_requests),
            ));
        }
        if !(self.bytes_per_token > 0.0 && self.bytes_per_token.is_finite()) {
            return Err(Error::validation("bytes_per_token", "must be positive"));
        }
        for (&category, &count) in &self.per_category_counts {
            if count == 0 {
                continue;
            }
            let field = format!("token_lengths.{category}");
            let Some(d) = self.token_lengths.get(&category) else {
                return Err(Error::validation(field, "missing length distribution"));
            };
            for (name, value) in [
                ("prompt_median", d.prompt_median),
                ("response_median", d.response_median),
                ("tokens_per_sentence", d.tokens_per_sentence),
            ] {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::validation(format!("{field}.{name}"), "must be positive"));
                }
            }
            for (name, value) in [("prompt_sigma", d.prompt_sigma), ("response_sigma", d.response_sigma)] {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::validation(format!("{field}.{name}"), "must be >= 0"));
                }
            }
            if !(0.0..=1.0).contains(&d.constraint_probability) {
                return Err(Error::validation(
                    format!("{field}.constraint_probability"),
                    "must lie in [0, 1]",
                ));
            }
            if self.ordering == Ordering::RoundRobin && !self.category_order.contains(&category) {
                return Err(Error::validation(
                    "category_order",
                    format!("`{category}` has requests but is not in the order"),
                ));
            }
        }
        let mut seen = self.category_order.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.category_order.len() {
            return Err(Error::validation("category_order", "categories must not repeat"));
        }
        match self.arrival_process {
            ArrivalProcess::ClosedLoop { concurrency: 0 } => {
                Err(Error::validation("arrival_process.closed_loop.concurrency", "must be >= 1"))
            }
            ArrivalProcess::Open { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(Error::validation("arrival_process.open.rate", "must be positive"))
            }
            _ => Ok(()),
        }
    }

    fn category_sequence(&self, seed: u64) -> Vec<RequestCategory> {
        match self.ordering {
            Ordering::RoundRobin => {
                let mut remaining: Vec<(RequestCategory, u32)> = self
                    .category_order
                    .iter()
                    .map(|c| (*c, self.per_category_counts.get(c).copied().unwrap_or(0)))
                    .collect();
                let mut out = Vec::with_capacity(self.total_requests as usize);
                while out.len() < self.total_requests as usize {
                    for (c, left) in remaining.iter_mut().filter(|(_, n)| *n > 0) {
                        out.push(*c);
                        *left -= 1;
                    }
                }
                out
            }
            Ordering::Shuffled => {
                let mut out: Vec<RequestCategory> = self
                    .per_category_counts
                    .iter()
                    .flat_map(|(c, &n)| std::iter::repeat_n(*c, n as usize))
                    .collect();
                out.shuffle(&mut rng::stream(&[seed, tag::WORKLOAD, u64::MAX]));
                out
            }
        }
    }
}

fn draw_length<R: Rng>(rng: &mut R, median: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return median;
    }
    LogNormal::new(median.ln(), sigma)
        .expect("validated parameters")
        .sample(rng)
}

/// Generates the request list described by `spec`.
///
/// `default_seed` is used when the spec does not pin its own seed. Every
/// request draws from its own stream keyed by `(seed, id)`, so the output is a
/// pure function of the spec and seed.
pub fn generate_workload(spec: &WorkloadSpec, default_seed: u64) -> Result<Vec<InferenceRequest>> {
    spec.validate()?;
    let seed = spec.seed.unwrap_or(default_seed);
    let categories = spec.category_sequence(seed);

    let mut arrivals = rng::stream(&[seed, tag::WORKLOAD, u64::MAX - 1]);
    let gap = match spec.arrival_process {
        ArrivalProcess::Open { rate } => Some(Exp::new(rate).expect("validated rate")),
        ArrivalProcess::ClosedLoop { .. } => None,
    };
    let mut clock = 0.0;

    let requests = categories
        .into_iter()
        .enumerate()
        .map(|(i, category)| {
            let id = i as u64;
            let d = spec.token_lengths[&category];
            let mut r = rng::stream(&[seed, tag::WORKLOAD, id]);
            let prompt_tokens = draw_length(&mut r, d.prompt_median, d.prompt_sigma)
                .round()
                .max(1.0) as u32;
            let expected_response_tokens =
                draw_length(&mut r, d.response_median, d.response_sigma).round() as u32;
            let sentence_count = ((f64::from(prompt_tokens) / d.tokens_per_sentence).ceil() as u32).max(1);
            let has_output_constraint = r.random_bool(d.constraint_probability);
            let arrival_time = match &gap {
                Some(exp) => {
                    clock += exp.sample(&mut arrivals);
                    clock
                }
                None => 0.0,
            };
            InferenceRequest {
                id,
                category,
                prompt_tokens,
                expected_response_tokens,
                query_size_bytes: token_bytes(prompt_tokens, spec.bytes_per_token).max(1),
                response_size_bytes: token_bytes(expected_response_tokens, spec.bytes_per_token),
                sentence_count,
                has_output_constraint,
                arrival_time,
            }
        })
        .collect();
    Ok(requests)
}

fn token_bytes(tokens: u32, bytes_per_token: f64) -> u64 {
    (f64::from(tokens) * bytes_per_token).round() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_mix_cycles_code_math_commonsense_reading() {
        let reqs = generate_workload(&WorkloadSpec::balanced(125, 7), 0).unwrap();
        assert_eq!(reqs.len(), 500);
        let order = [
            RequestCategory::Code,
            RequestCategory::Math,
            RequestCategory::Commonsense,
            RequestCategory::Reading,
        ];
        for (i, r) in reqs.iter().enumerate() {
            assert_eq!(r.id, i as u64);
            assert_eq!(r.category, order[i % 4]);
        }
        for w in reqs.windows(4) {
            let mut cats: Vec<_> = w.iter().map(|r| r.category).collect();
            cats.sort();
            cats.dedup();
            assert_eq!(cats.len(), 4);
        }
    }

    #[test]
    fn smallest_balanced_workload() {
        let reqs = generate_workload(&WorkloadSpec::balanced(1, 3), 0).unwrap();
        let mut cats: Vec<_> = reqs.iter().map(|r| r.category).collect();
        cats.sort();
        assert_eq!(cats, RequestCategory::DATASET.to_vec());
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = WorkloadSpec::balanced(25, 11);
        let a = serde_json::to_string(&generate_workload(&spec, 0).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_workload(&spec, 0).unwrap()).unwrap();
        assert_eq!(a, b);
        let mut other = spec.clone();
        other.seed = Some(12);
        let c = serde_json::to_string(&generate_workload(&other, 0).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn spec_seed_takes_precedence_over_default() {
        let mut spec = WorkloadSpec::balanced(5, 1);
        let pinned = generate_workload(&spec, 99).unwrap();
        spec.seed = None;
        assert_eq!(generate_workload(&spec, 1).unwrap(), pinned);
    }

    #[test]
    fn count_mismatch_names_field() {
        let mut spec = WorkloadSpec::balanced(10, 1);
        spec.total_requests = 41;
        let err = generate_workload(&spec, 0).unwrap_err();
        assert!(err.to_string().contains("per_category_counts"), "{err}");
    }

    #[test]
    fn nonpositive_median_names_field() {
        let mut spec = WorkloadSpec::balanced(10, 1);
        spec.token_lengths.get_mut(&RequestCategory::Math).unwrap().prompt_median = 0.0;
        let err = generate_workload(&spec, 0).unwrap_err();
        assert!(err.to_string().contains("token_lengths.math.prompt_median"), "{err}");
    }

    #[test]
    fn general_never_generated() {
        let mut spec = WorkloadSpec::balanced(2, 1);
        spec.per_category_counts.insert(RequestCategory::General, 1);
        spec.total_requests += 1;
        assert!(generate_workload(&spec, 0).is_err());
    }

    #[test]
    fn shuffled_keeps_counts() {
        let mut spec = WorkloadSpec::balanced(30, 5);
        spec.ordering = Ordering::Shuffled;
        let reqs = generate_workload(&spec, 0).unwrap();
        for c in RequestCategory::DATASET {
            assert_eq!(reqs.iter().filter(|r| r.category == c).count(), 30);
        }
    }

    #[test]
    fn open_arrivals_are_increasing() {
        let mut spec = WorkloadSpec::balanced(20, 5);
        spec.arrival_process = ArrivalProcess::Open { rate: 2.0 };
        let reqs = generate_workload(&spec, 0).unwrap();
        assert!(reqs.windows(2).all(|w| w[0].arrival_time <= w[1].arrival_time));
        assert!(reqs[0].arrival_time > 0.0);
    }

    #[test]
    fn byte_sizes_follow_tokens() {
        for r in generate_workload(&WorkloadSpec::balanced(50, 2), 0).unwrap() {
            assert_eq!(r.query_size_bytes, u64::from(r.prompt_tokens) * 4);
            assert_eq!(r.response_size_bytes, u64::from(r.expected_response_tokens) * 4);
            assert!(r.total_tokens() >= 1 && r.sentence_count >= 1);
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = WorkloadSpec::balanced(125, 42);
        assert_eq!(WorkloadSpec::from_json(&spec.to_json()).unwrap(), spec);
        let minimal = r#"{"total_requests": 4, "per_category_counts": {"code": 1, "math": 1, "reading": 1, "commonsense": 1}, "ordering": "round_robin"}"#;
        let parsed = WorkloadSpec::from_json(minimal).unwrap();
        assert_eq!(parsed.bytes_per_token, 4.0);
        assert_eq!(parsed.seed, None);
    }

    proptest::proptest! {
        #[test]
        fn byte_sizes_monotone_in_tokens(a in 0u32..100_000, b in 0u32..100_000, bpt in 0.5f64..8.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(token_bytes(lo, bpt) <= token_bytes(hi, bpt));
        }
    }
}
