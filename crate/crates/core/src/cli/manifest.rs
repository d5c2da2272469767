use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::optimize::{optimize_thresholds, GenomeKind, OptimizeSettings};
use crate::domain::{generate_workload, read_topology, ArrivalProcess, InferenceRequest, Topology, WorkloadSpec};
use crate::error::{Error, Result};
use crate::metrics::Weights;
use crate::moo::EvolutionConfig;
use crate::policy::{Baseline, ClassifierConfig, ComplexityConfig, PolicyDocument, Router};
use crate::SCHEMA_VERSION;

/// Workload given by path or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorkloadSource {
    Path(PathBuf),
    Inline(Box<WorkloadSpec>),
}

/// A router to run: a baseline name, or a named threshold policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RouterEntry {
    Baseline(String),
    Policy {
        name: String,
        /// Policy document; when absent the policy is optimized on the fly.
        #[serde(default)]
        policy: Option<PathBuf>,
    },
}

impl RouterEntry {
    pub fn name(&self) -> &str {
        match self {
            RouterEntry::Baseline(n) => n,
            RouterEntry::Policy { name, .. } => name,
        }
    }
}

/// Settings for policies optimized from the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    pub genome: GenomeKind,
    /// Closed-loop window candidates are simulated with.
    pub concurrency: u32,
    pub q_max: u32,
    pub classifier: ClassifierConfig,
    pub complexity: ComplexityConfig,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        OptimizeSection {
            genome: GenomeKind::Threshold,
            concurrency: 1,
            q_max: 64,
            classifier: ClassifierConfig::default(),
            complexity: ComplexityConfig::default(),
        }
    }
}

/// One experiment as a single document. Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub topology: PathBuf,
    pub workload: WorkloadSource,
    pub routers: Vec<RouterEntry>,
    #[serde(default = "Weights::equal")]
    pub weights: Weights,
    #[serde(default = "default_levels")]
    pub concurrency_levels: Vec<u32>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub optimize: OptimizeSection,
}

fn default_levels() -> Vec<u32> {
    vec![1, 4, 8, 10]
}

impl ExperimentManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: ExperimentManifest = serde_json::from_str(text).map_err(|e| {
            Error::schema(format!("manifest line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", m.schema_version),
            ));
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Command-line overrides applied on top of a manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Replaces the simulated concurrency levels.
    pub concurrency: Option<u32>,
    /// Replaces the window candidate policies are evaluated with.
    pub optimize_concurrency: Option<u32>,
    pub parallel: Option<bool>,
    pub population_size: Option<usize>,
    pub generations: Option<usize>,
}

/// A manifest with every input loaded and validated.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub manifest: ExperimentManifest,
    pub topology: Topology,
    pub workload: WorkloadSpec,
    pub requests: Vec<InferenceRequest>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub concurrency_levels: Vec<u32>,
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,
}

/// A resolved router, instantiated fresh for every simulation since
/// baselines carry a cursor.
#[derive(Debug, Clone)]
pub enum RouterSpec {
    Baseline(Baseline),
    Policy {
        name: String,
        document: PolicyDocument,
        /// Whether the policy was optimized from the manifest rather than read.
        optimized: bool,
    },
}

impl RouterSpec {
    pub fn instantiate(&self, topology: &Topology, seed: u64) -> Result<Box<dyn Router>> {
        Ok(match self {
            RouterSpec::Baseline(b) => Box::new(b.build(topology, seed)?),
            RouterSpec::Policy { name, document, .. } => {
                Box::new(document.router(topology, seed)?.with_name(name.clone()))
            }
        })
    }
}

impl Experiment {
    pub fn load(manifest_path: impl AsRef<Path>, overrides: &Overrides) -> Result<Self> {
        let path = manifest_path.as_ref();
        let manifest = ExperimentManifest::read(path)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_manifest(manifest, base_dir, overrides)
    }

    pub fn from_manifest(mut manifest: ExperimentManifest, base_dir: PathBuf, overrides: &Overrides) -> Result<Self> {
        if manifest.routers.is_empty() {
            return Err(Error::validation("routers", "at least one router is required"));
        }
        let mut names = std::collections::HashSet::new();
        for (i, r) in manifest.routers.iter().enumerate() {
            if !names.insert(r.name()) {
                return Err(Error::validation(format!("routers[{i}]"), format!("duplicate router `{}`", r.name())));
            }
            if let RouterEntry::Baseline(name) = r {
                name.parse::<Baseline>().map_err(|_| {
                    Error::validation(format!("routers[{i}]"), format!("unknown baseline `{name}`; known: {}", baseline_names()))
                })?;
            }
        }
        let seed = overrides.seed.unwrap_or(manifest.seed);
        let concurrency_levels = match overrides.concurrency {
            Some(c) => vec![c],
            None => manifest.concurrency_levels.clone(),
        };
        if concurrency_levels.is_empty() || concurrency_levels.contains(&0) {
            return Err(Error::validation("concurrency_levels", "need at least one level, each >= 1"));
        }
        if let Some(p) = overrides.parallel {
            manifest.evolution.parallel = p;
        }
        if let Some(p) = overrides.population_size {
            manifest.evolution.population_size = p;
        }
        if let Some(t) = overrides.generations {
            manifest.evolution.generations = t;
        }
        if let Some(c) = overrides.optimize_concurrency {
            manifest.optimize.concurrency = c;
        }
        manifest.evolution.seed = seed;
        manifest.evolution.weights = manifest.weights;
        manifest.evolution.validate()?;
        if manifest.optimize.concurrency == 0 {
            return Err(Error::validation("optimize.concurrency", "must be >= 1"));
        }
        manifest.optimize.classifier.validate()?;
        manifest.optimize.complexity.validate()?;

        let topology = read_topology(base_dir.join(&manifest.topology))?;
        let workload = match &manifest.workload {
            WorkloadSource::Path(p) => WorkloadSpec::read(base_dir.join(p))?,
            WorkloadSource::Inline(spec) => (**spec).clone(),
        };
        if workload.total_requests == 0 {
            return Err(Error::validation("workload.total_requests", "workload is empty"));
        }
        let requests = generate_workload(&workload, seed)?;
        for (i, r) in manifest.routers.iter().enumerate() {
            if let RouterEntry::Policy { policy: Some(p), .. } = r {
                let p = base_dir.join(p);
                if !p.exists() {
                    return Err(Error::validation(format!("routers[{i}].policy"), format!("{} does not exist", p.display())));
                }
            }
        }
        let output_dir = overrides
            .output_dir
            .clone()
            .unwrap_or_else(|| base_dir.join(&manifest.output_dir));
        Ok(Experiment {
            manifest,
            topology,
            workload,
            requests,
            seed,
            output_dir,
            concurrency_levels,
            base_dir,
        })
    }

    pub fn router_names(&self) -> Vec<&str> {
        self.manifest.routers.iter().map(RouterEntry::name).collect()
    }

    pub fn optimize_settings(&self) -> OptimizeSettings {
        let o = &self.manifest.optimize;
        OptimizeSettings {
            evolution: self.manifest.evolution.clone(),
            classifier: o.classifier.clone(),
            complexity: o.complexity.clone(),
            concurrency: o.concurrency,
            seed: self.seed,
            weights: self.manifest.weights,
            q_max: o.q_max,
        }
    }

    /// Whether requests are released at their arrival times.
    pub fn open_loop(&self) -> bool {
        matches!(self.workload.arrival_process, ArrivalProcess::Open { .. })
    }

    /// Resolves the router called `name`, optimizing its policy first when
    /// the manifest gives none.
    pub fn resolve_router(&self, name: &str) -> Result<RouterSpec> {
        let entry = self
            .manifest
            .routers
            .iter()
            .find(|r| r.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown router `{name}`; known: {}",
                    self.router_names().join(", ")
                ))
            })?;
        match entry {
            RouterEntry::Baseline(b) => Ok(RouterSpec::Baseline(b.parse()?)),
            RouterEntry::Policy { name, policy: Some(p) } => Ok(RouterSpec::Policy {
                name: name.clone(),
                document: PolicyDocument::read(self.base_dir.join(p))?,
                optimized: false,
            }),
            RouterEntry::Policy { name, policy: None } => {
                if self.manifest.optimize.genome != GenomeKind::Threshold {
                    return Err(Error::Config(format!(
                        "router `{name}` needs a policy file; only threshold policies are optimized inline"
                    )));
                }
                let settings = self.optimize_settings();
                let document = optimize_thresholds(&self.topology, &self.requests, &settings, |_| {})?.policy(&settings);
                Ok(RouterSpec::Policy {
                    name: name.clone(),
                    document,
                    optimized: true,
                })
            }
        }
    }
}

fn baseline_names() -> String {
    Baseline::ALL.map(|b| b.as_str()).join(", ")
}
