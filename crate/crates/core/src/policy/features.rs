use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::domain::{InferenceRequest, RequestCategory};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Weights and reference scales of the prompt complexity score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplexityConfig {
    pub w_length: f64,
    pub w_sentences: f64,
    pub w_task: f64,
    pub w_constraint: f64,
    /// Prompt length at which the length term saturates.
    pub length_ref: f64,
    pub sentence_ref: f64,
    pub task_weights: BTreeMap<RequestCategory, f64>,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        use RequestCategory::*;
        ComplexityConfig {
            w_length: 0.4,
            w_sentences: 0.2,
            w_task: 0.3,
            w_constraint: 0.1,
            length_ref: 512.0,
            sentence_ref: 20.0,
            task_weights: [(Code, 0.8), (Math, 0.6), (Reading, 0.3), (Commonsense, 0.2), (General, 0.0)]
                .into_iter()
                .collect(),
        }
    }
}

impl ComplexityConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, w) in [
            ("complexity.w_length", self.w_length),
            ("complexity.w_sentences", self.w_sentences),
            ("complexity.w_task", self.w_task),
            ("complexity.w_constraint", self.w_constraint),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::validation(field, "weight must be finite and >= 0"));
            }
        }
        for (field, r) in [
            ("complexity.length_ref", self.length_ref),
            ("complexity.sentence_ref", self.sentence_ref),
        ] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::validation(field, "reference scale must be positive"));
            }
        }
        for (cat, w) in &self.task_weights {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::validation(
                    format!("complexity.task_weights.{cat}"),
                    "task weight must lie in [0, 1]",
                ));
            }
        }
        Ok(())
    }

    pub fn task_weight(&self, category: RequestCategory) -> f64 {
        self.task_weights.get(&category).copied().unwrap_or(0.0)
    }
}

fn saturate(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Weighted prompt complexity in `[0, 1]`. The task term uses the predicted
/// category, since the router never sees the true one.
pub fn complexity_score(
    request: &InferenceRequest,
    predicted: RequestCategory,
    config: &ComplexityConfig,
) -> f64 {
    let c = config.w_length * saturate(f64::from(request.prompt_tokens) / config.length_ref)
        + config.w_sentences * saturate(f64::from(request.sentence_count) / config.sentence_ref)
        + config.w_task * config.task_weight(predicted)
        + if request.has_output_constraint { config.w_constraint } else { 0.0 };
    saturate(c)
}

/// Stand-in for a trained task classifier: right with probability
/// `1 - noise`, otherwise a uniformly drawn wrong label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub noise: f64,
    /// Beta parameters of the confidence when the label is right.
    pub correct_confidence: [f64; 2],
    pub incorrect_confidence: [f64; 2],
    /// Label set wrong answers are drawn from.
    pub labels: Vec<RequestCategory>,
    /// Predictions with confidence below this become `general`. 0 disables.
    pub general_below: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            noise: 0.05,
            correct_confidence: [8.0, 2.0],
            incorrect_confidence: [2.0, 2.0],
            labels: RequestCategory::DATASET.to_vec(),
            general_below: 0.0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::validation("classifier.noise", "must lie in [0, 1]"));
        }
        for (field, [a, b]) in [
            ("classifier.correct_confidence", self.correct_confidence),
            ("classifier.incorrect_confidence", self.incorrect_confidence),
        ] {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(Error::validation(field, "beta parameters must be positive"));
            }
        }
        if self.labels.is_empty() {
            return Err(Error::validation("classifier.labels", "label set is empty"));
        }
        if !(0.0..=1.0).contains(&self.general_below) {
            return Err(Error::validation("classifier.general_below", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Predicted category and confidence for `request`, reproducible per
/// `(seed, request id)`.
pub fn classify_task(
    request: &InferenceRequest,
    config: &ClassifierConfig,
    seed: u64,
) -> (RequestCategory, f64) {
    let mut rng = rng::stream(&[seed, tag::CLASSIFIER, request.id]);
    let wrong: Vec<RequestCategory> = config
        .labels
        .iter()
        .copied()
        .filter(|&c| c != request.category)
        .collect();
    let flip = rng.random::<f64>() < config.noise;
    let (label, [a, b]) = if flip && !wrong.is_empty() {
        (wrong[rng.random_range(0..wrong.len())], config.incorrect_confidence)
    } else {
        (request.category, config.correct_confidence)
    };
    let confidence = Beta::new(a, b)
        .expect("validated beta parameters")
        .sample(&mut rng)
        .clamp(0.0, 1.0);
    if confidence < config.general_below {
        (RequestCategory::General, confidence)
    } else {
        (label, confidence)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use RequestCategory::*;

    fn request(id: u64, category: RequestCategory, prompt: u32, sentences: u32, constraint: bool) -> InferenceRequest {
        InferenceRequest {
            id,
            category,
            prompt_tokens: prompt,
            expected_response_tokens: 10,
            query_size_bytes: 4 * u64::from(prompt),
            response_size_bytes: 40,
            sentence_count: sentences,
            has_output_constraint: constraint,
            arrival_time: 0.0,
        }
    }

    #[test]
    fn complexity_examples() {
        let cfg = ComplexityConfig::default();
        let floor = complexity_score(&request(0, Code, 1, 1, false), General, &cfg);
        // only the two ramps contribute: 0.4/512 + 0.2/20
        assert!((floor - (0.4 / 512.0 + 0.2 / 20.0)).abs() < 1e-12);
        assert!(floor < 0.011);

        let mut heavy = cfg.clone();
        heavy.task_weights.insert(Code, 1.0);
        assert_eq!(complexity_score(&request(0, Code, 600, 25, true), Code, &heavy), 1.0);

        let c = complexity_score(&request(0, Math, 256, 10, true), Math, &cfg);
        assert!((c - 0.58).abs() < 1e-12, "{c}");
    }

    #[test]
    fn noiseless_classifier_is_exact() {
        let cfg = ClassifierConfig { noise: 0.0, ..ClassifierConfig::default() };
        for id in 0..200 {
            let cat = RequestCategory::DATASET[id as usize % 4];
            let (label, p) = classify_task(&request(id, cat, 10, 1, false), &cfg, 3);
            assert_eq!(label, cat);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn fully_noisy_binary_classifier_always_flips() {
        let cfg = ClassifierConfig {
            noise: 1.0,
            labels: vec![Code, Math],
            ..ClassifierConfig::default()
        };
        for id in 0..100 {
            assert_eq!(classify_task(&request(id, Code, 10, 1, false), &cfg, 1).0, Math);
            assert_eq!(classify_task(&request(id, Math, 10, 1, false), &cfg, 1).0, Code);
        }
    }

    #[test]
    fn accuracy_tracks_noise() {
        let cfg = ClassifierConfig { noise: 0.1, ..ClassifierConfig::default() };
        let n = 10_000;
        let hits = (0..n)
            .filter(|&id| {
                let cat = RequestCategory::DATASET[id as usize % 4];
                classify_task(&request(id, cat, 10, 1, false), &cfg, 11).0 == cat
            })
            .count();
        let acc = hits as f64 / n as f64;
        assert!((acc - 0.9).abs() <= 0.01, "accuracy {acc}");
    }

    #[test]
    fn confidence_separates_right_from_wrong() {
        let cfg = ClassifierConfig { noise: 0.5, ..ClassifierConfig::default() };
        let (mut right, mut wrong) = (Vec::new(), Vec::new());
        for id in 0..4000 {
            let (label, p) = classify_task(&request(id, Reading, 10, 1, false), &cfg, 5);
            if label == Reading { right.push(p) } else { wrong.push(p) }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        // Beta(8,2) has mean 0.8, Beta(2,2) has mean 0.5
        assert!((mean(&right) - 0.8).abs() < 0.02);
        assert!((mean(&wrong) - 0.5).abs() < 0.02);
    }

    #[test]
    fn low_confidence_maps_to_general() {
        let cfg = ClassifierConfig { general_below: 1.0, ..ClassifierConfig::default() };
        assert_eq!(classify_task(&request(9, Code, 10, 1, false), &cfg, 0).0, General);
    }

    proptest::proptest! {
        #[test]
        fn complexity_in_unit_interval(prompt in 1u32..5000, sentences in 1u32..200, constraint: bool, k in 0usize..5) {
            let c = complexity_score(&request(0, Code, prompt, sentences, constraint), RequestCategory::ALL[k], &ComplexityConfig::default());
            proptest::prop_assert!((0.0..=1.0).contains(&c));
        }
    }
}
