use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{ModelKind, ModelSpec, NodeSpec, RequestCategory, Tier};
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

/// A valid `(node, model)` assignment, stored as indices into the topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodePair {
    pub node: usize,
    pub model: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDocument {
    schema_version: u32,
    nodes: Vec<NodeSpec>,
    models: Vec<ModelSpec>,
}

/// Validated cloud-edge topology with its model catalog.
///
/// Construction checks referential integrity and caches the valid solution
/// space, so routers and the simulator can work with plain indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<NodeSpec>,
    models: Vec<ModelSpec>,
    /// Per node, indices of deployed models in declared order.
    deployments: Vec<Vec<usize>>,
    solution_space: Vec<NodePair>,
}

impl Topology {
    pub fn new(nodes: Vec<NodeSpec>, models: Vec<ModelSpec>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::schema("nodes", "topology must declare at least one node"));
        }
        if models.is_empty() {
            return Err(Error::schema("models", "model catalog is empty"));
        }

        let mut model_ids = HashMap::new();
        for (i, m) in models.iter().enumerate() {
            let path = format!("models[{i}]");
            if model_ids.insert(m.id.as_str(), i).is_some() {
                return Err(Error::schema(
                    format!("{path}.id"),
                    format!("duplicate model id `{}`", m.id),
                ));
            }
            validate_model(m, &path)?;
        }

        let mut node_ids = HashMap::new();
        let mut deployments = Vec::with_capacity(nodes.len());
        for (j, n) in nodes.iter().enumerate() {
            let path = format!("nodes[{j}]");
            if node_ids.insert(n.id.as_str(), j).is_some() {
                return Err(Error::schema(
                    format!("{path}.id"),
                    format!("duplicate node id `{}`", n.id),
                ));
            }
            validate_node(n, &path)?;
            let mut deployed = Vec::with_capacity(n.deployed_models.len());
            for (k, id) in n.deployed_models.iter().enumerate() {
                let Some(&m) = model_ids.get(id.as_str()) else {
                    return Err(Error::schema(
                        format!("{path}.deployed_models[{k}]"),
                        format!("unknown model id `{id}`"),
                    ));
                };
                if deployed.contains(&m) {
                    return Err(Error::schema(
                        format!("{path}.deployed_models[{k}]"),
                        format!("model `{id}` deployed twice"),
                    ));
                }
                deployed.push(m);
            }
            deployments.push(deployed);
        }

        if !nodes.iter().any(|n| n.tier == Tier::Cloud) {
            return Err(Error::schema("nodes", "at least one cloud node is required"));
        }

        let solution_space = deployments
            .iter()
            .enumerate()
            .flat_map(|(node, ms)| ms.iter().map(move |&model| NodePair { node, model }))
            .collect();

        Ok(Topology {
            nodes,
            models,
            deployments,
            solution_space,
        })
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn models(&self) -> &[ModelSpec] {
        &self.models
    }

    pub fn node(&self, index: usize) -> &NodeSpec {
        &self.nodes[index]
    }

    pub fn model(&self, index: usize) -> &ModelSpec {
        &self.models[index]
    }

    /// Deployed model indices of a node, in declared order.
    pub fn deployed(&self, node: usize) -> &[usize] {
        &self.deployments[node]
    }

    /// All valid `(node, model)` pairs in node-major declared order.
    pub fn solution_space(&self) -> &[NodePair] {
        &self.solution_space
    }

    pub fn contains(&self, pair: NodePair) -> bool {
        pair.node < self.nodes.len() && self.deployments[pair.node].contains(&pair.model)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn model_index(&self, id: &str) -> Option<usize> {
        self.models.iter().position(|m| m.id == id)
    }

    pub fn pair_by_ids(&self, node: &str, model: &str) -> Option<NodePair> {
        let pair = NodePair {
            node: self.node_index(node)?,
            model: self.model_index(model)?,
        };
        self.contains(pair).then_some(pair)
    }

    pub fn edge_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&j| self.nodes[j].tier == Tier::Edge)
    }

    pub fn cloud_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&j| self.nodes[j].tier == Tier::Cloud)
    }

    /// First deployed model of `kind` on `node`.
    pub fn model_of_kind(&self, node: usize, kind: ModelKind) -> Option<usize> {
        self.deployments[node]
            .iter()
            .copied()
            .find(|&m| self.models[m].kind == kind)
    }

    /// The `large` model on the first cloud node that hosts one.
    pub fn high_capacity_pair(&self) -> Result<NodePair> {
        self.cloud_nodes()
            .find_map(|node| {
                self.model_of_kind(node, ModelKind::Large)
                    .map(|model| NodePair { node, model })
            })
            .ok_or_else(|| {
                Error::Config("no cloud node hosts a model of kind `large`".to_string())
            })
    }

    pub fn describe(&self, pair: NodePair) -> (&str, &str) {
        (&self.nodes[pair.node].id, &self.models[pair.model].id)
    }
}

fn validate_model(m: &ModelSpec, path: &str) -> Result<()> {
    if !(m.price_per_million_tokens > 0.0 && m.price_per_million_tokens.is_finite()) {
        return Err(Error::schema(
            format!("{path}.price_per_million_tokens"),
            "must be positive",
        ));
    }
    for (field, rate) in [("prefill_rate", m.prefill_rate), ("decode_rate", m.decode_rate)] {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::schema(format!("{path}.{field}"), "must be positive"));
        }
    }
    if !(m.base_overhead >= 0.0 && m.base_overhead.is_finite()) {
        return Err(Error::schema(format!("{path}.base_overhead"), "must be >= 0"));
    }
    for category in RequestCategory::DATASET {
        let Some(p) = m.quality_profile.get(&category) else {
            return Err(Error::schema(
                format!("{path}.quality_profile"),
                format!("missing entry for `{category}`"),
            ));
        };
        if !(0.0..=1.0).contains(&p.mean) {
            return Err(Error::schema(
                format!("{path}.quality_profile.{category}.mean"),
                "must lie in [0, 1]",
            ));
        }
        if !(p.spread >= 0.0 && p.spread.is_finite()) {
            return Err(Error::schema(
                format!("{path}.quality_profile.{category}.spread"),
                "must be >= 0",
            ));
        }
        // a beta law with this mean cannot be wider than a two-point law
        if p.spread > 0.0 && p.mean > 0.0 && p.mean < 1.0 && p.spread * p.spread >= p.mean * (1.0 - p.mean) {
            return Err(Error::schema(
                format!("{path}.quality_profile.{category}.spread"),
                format!("too wide for mean {}", p.mean),
            ));
        }
    }
    Ok(())
}

fn validate_node(n: &NodeSpec, path: &str) -> Result<()> {
    for (field, bw) in [
        ("bandwidth_to_node", n.bandwidth_to_node),
        ("bandwidth_from_node", n.bandwidth_from_node),
    ] {
        if !(bw > 0.0) || bw.is_nan() {
            return Err(Error::schema(format!("{path}.{field}"), "must be positive"));
        }
    }
    for (field, lat) in [
        ("latency_to_node", n.latency_to_node),
        ("latency_from_node", n.latency_from_node),
    ] {
        if !(lat >= 0.0 && lat.is_finite()) {
            return Err(Error::schema(format!("{path}.{field}"), "must be >= 0"));
        }
    }
    if n.max_concurrent == 0 {
        return Err(Error::schema(format!("{path}.max_concurrent"), "must be >= 1"));
    }
    if n.deployed_models.is_empty() {
        return Err(Error::schema(
            format!("{path}.deployed_models"),
            "node must deploy at least one model",
        ));
    }
    if !(n.speed_multiplier > 0.0 && n.speed_multiplier.is_finite()) {
        return Err(Error::schema(format!("{path}.speed_multiplier"), "must be positive"));
    }
    Ok(())
}

/// Parses and validates a topology document.
pub fn load_topology(document: &str) -> Result<Topology> {
    let doc: TopologyDocument = serde_json::from_str(document)
        .map_err(|e| Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::schema(
            "schema_version",
            format!("unsupported version {}", doc.schema_version),
        ));
    }
    Topology::new(doc.nodes, doc.models)
}

pub fn read_topology(path: impl AsRef<Path>) -> Result<Topology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_topology(&text).map_err(|e| match e {
        Error::Schema { path: p, message } => Error::Schema {
            path: format!("{}: {p}", path.display()),
            message,
        },
        other => other,
    })
}

pub fn save_topology(topology: &Topology) -> String {
    let doc = TopologyDocument {
        schema_version: SCHEMA_VERSION,
        nodes: topology.nodes.clone(),
        models: topology.models.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("topology serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{model, node, testbed};

    #[test]
    fn testbed_solution_space_has_ten_pairs() {
        let t = testbed();
        assert_eq!(t.solution_space().len(), 10);
        assert_eq!(t.high_capacity_pair().unwrap(), NodePair { node: 0, model: 0 });
        assert_eq!(t.edge_nodes().count(), 3);
        assert!(t.solution_space().iter().all(|&p| t.contains(p)));
    }

    #[test]
    fn zero_nodes_rejected() {
        let err = Topology::new(vec![], vec![model("large", ModelKind::Large)]).unwrap_err();
        assert!(matches!(err, Error::Schema { ref path, .. } if path == "nodes"), "{err}");
    }

    #[test]
    fn unknown_model_reference_names_the_id() {
        let nodes = vec![
            node("cloud-0", Tier::Cloud, &["large"]),
            node("edge-0", Tier::Edge, &["ghost"]),
        ];
        let err = Topology::new(nodes, vec![model("large", ModelKind::Large)]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ghost") && msg.contains("nodes[1].deployed_models[0]"), "{msg}");
    }

    #[test]
    fn duplicate_node_and_missing_cloud_rejected() {
        let models = vec![model("large", ModelKind::Large)];
        let dup = vec![
            node("a", Tier::Cloud, &["large"]),
            node("a", Tier::Edge, &["large"]),
        ];
        assert!(Topology::new(dup, models.clone())
            .unwrap_err()
            .to_string()
            .contains("nodes[1].id"));
        let edge_only = vec![node("e", Tier::Edge, &["large"])];
        assert!(Topology::new(edge_only, models).is_err());
    }

    #[test]
    fn missing_quality_profile_rejected() {
        let mut m = model("large", ModelKind::Large);
        m.quality_profile.remove(&RequestCategory::Reading);
        let err = Topology::new(vec![node("c", Tier::Cloud, &["large"])], vec![m]).unwrap_err();
        assert!(err.to_string().contains("reading"));
    }

    #[test]
    fn save_load_round_trip() {
        let t = testbed();
        let text = save_topology(&t);
        let back = load_topology(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(save_topology(&back), text);
    }

    #[test]
    fn wrong_schema_version_rejected() {
        let text = save_topology(&testbed()).replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(load_topology(&text).unwrap_err().to_string().contains("schema_version"));
    }
}
