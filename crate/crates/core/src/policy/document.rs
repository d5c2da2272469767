use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{ClassifierConfig, ComplexityConfig};
use super::router::ThresholdRouter;
use crate::domain::Topology;
use crate::error::{Error, Result};
use crate::metrics::ObjectiveVector;
use crate::moo::ThresholdGenome;
use crate::SCHEMA_VERSION;

/// On-disk threshold policy: the six thresholds plus the feature settings
/// they were tuned against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub schema_version: u32,
    pub thresholds: ThresholdGenome,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub complexity: ComplexityConfig,
    /// Objectives measured during optimization, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objectives: Option<ObjectiveVector>,
}

impl Default for PolicyDocument {
    fn default() -> Self {
        PolicyDocument {
            schema_version: SCHEMA_VERSION,
            thresholds: ThresholdGenome::default(),
            classifier: ClassifierConfig::default(),
            complexity: ComplexityConfig::default(),
            objectives: None,
        }
    }
}

impl PolicyDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PolicyDocument =
            serde_json::from_str(text).map_err(|e| Error::schema("policy", e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", doc.schema_version),
            ));
        }
        doc.classifier.validate()?;
        doc.complexity.validate()?;
        if !doc.thresholds.is_valid(u32::MAX) {
            return Err(Error::validation("thresholds", "thresholds must lie in [0, 1]"));
        }
        Ok(doc)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Schema { path: field, message } => Error::schema(format!("{}: {field}", path.display()), message),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn router(&self, topology: &Topology, seed: u64) -> Result<ThresholdRouter> {
        ThresholdRouter::new(
            topology,
            self.thresholds,
            self.classifier.clone(),
            self.complexity.clone(),
            seed,
        )
    }
}
