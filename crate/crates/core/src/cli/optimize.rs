use serde::{Deserialize, Serialize};

use crate::domain::{InferenceRequest, Topology};
use crate::error::Result;
use crate::metrics::{ObjectiveVector, Weights};
use crate::moo::{
    evolve_with, select_policy, AssignmentGenome, AssignmentOps, EvolutionConfig, EvolutionResult,
    GenerationStats, ThresholdGenome, ThresholdOps,
};
use crate::policy::{AssignmentRouter, ClassifierConfig, ComplexityConfig, PolicyDocument, ThresholdRouter};
use crate::sim::{run_simulation, SimConfig};
use crate::SCHEMA_VERSION;

/// Which policy representation the optimizer searches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenomeKind {
    #[default]
    Threshold,
    Assignment,
}

/// Inputs of one optimization run besides topology and workload.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSettings {
    pub evolution: EvolutionConfig,
    pub classifier: ClassifierConfig,
    pub complexity: ComplexityConfig,
    /// Closed-loop window each candidate is simulated with.
    pub concurrency: u32,
    /// Seed of the candidate simulations (classifier and quality draws).
    pub seed: u64,
    pub weights: Weights,
    pub q_max: u32,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        OptimizeSettings {
            evolution: EvolutionConfig::default(),
            classifier: ClassifierConfig::default(),
            complexity: ComplexityConfig::default(),
            concurrency: 1,
            seed: 0,
            weights: Weights::equal(),
            q_max: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimized<G> {
    pub result: EvolutionResult<G>,
    /// Index into `result.pareto` chosen by the weights.
    pub selected: usize,
}

impl<G: Clone> Optimized<G> {
    pub fn selected_genome(&self) -> G {
        self.result.pareto[self.selected].genome.clone()
    }

    pub fn selected_objectives(&self) -> ObjectiveVector {
        self.result.pareto[self.selected].objectives
    }
}

impl Optimized<ThresholdGenome> {
    /// Policy document for the selected thresholds.
    pub fn policy(&self, settings: &OptimizeSettings) -> PolicyDocument {
        PolicyDocument {
            schema_version: SCHEMA_VERSION,
            thresholds: self.selected_genome(),
            classifier: settings.classifier.clone(),
            complexity: settings.complexity.clone(),
            objectives: Some(self.selected_objectives()),
        }
    }
}

/// Simulated objectives of one threshold policy.
pub fn evaluate_thresholds(
    topology: &Topology,
    requests: &[InferenceRequest],
    genome: &ThresholdGenome,
    settings: &OptimizeSettings,
) -> Result<ObjectiveVector> {
    let mut router = ThresholdRouter::new(
        topology,
        *genome,
        settings.classifier.clone(),
        settings.complexity.clone(),
        settings.seed,
    )?;
    let config = SimConfig::closed(settings.concurrency, settings.seed);
    Ok(run_simulation(&config, topology, requests, &mut router)?.objectives)
}

pub fn evaluate_assignment(
    topology: &Topology,
    requests: &[InferenceRequest],
    genome: &AssignmentGenome,
    settings: &OptimizeSettings,
) -> Result<ObjectiveVector> {
    let mut router = AssignmentRouter::new(topology, genome.clone())?;
    let config = SimConfig::closed(settings.concurrency, settings.seed);
    Ok(run_simulation(&config, topology, requests, &mut router)?.objectives)
}

/// Evolves threshold policies, each scored by one seeded simulation.
pub fn optimize_thresholds(
    topology: &Topology,
    requests: &[InferenceRequest],
    settings: &OptimizeSettings,
    on_generation: impl FnMut(&GenerationStats),
) -> Result<Optimized<ThresholdGenome>> {
    settings.classifier.validate()?;
    settings.complexity.validate()?;
    topology.high_capacity_pair()?;
    let ops = ThresholdOps::new(settings.q_max);
    run(&settings.evolution, &ops, &settings.weights, on_generation, |g| {
        evaluate_thresholds(topology, requests, g, settings)
    })
}

/// Evolves per-request assignments directly.
pub fn optimize_assignment(
    topology: &Topology,
    requests: &[InferenceRequest],
    settings: &OptimizeSettings,
    on_generation: impl FnMut(&GenerationStats),
) -> Result<Optimized<AssignmentGenome>> {
    let ops = AssignmentOps::new(topology, requests);
    run(&settings.evolution, &ops, &settings.weights, on_generation, |g| {
        evaluate_assignment(topology, requests, g, settings)
    })
}

fn run<O, F>(
    config: &EvolutionConfig,
    ops: &O,
    weights: &Weights,
    mut on_generation: impl FnMut(&GenerationStats),
    evaluator: F,
) -> Result<Optimized<O::Genome>>
where
    O: crate::moo::GenomeOps,
    F: Fn(&O::Genome) -> Result<ObjectiveVector> + Sync,
{
    let result = evolve_with(config, ops, evaluator, |stats, _| on_generation(stats))?;
    let selected = select_policy(&result.pareto, weights)?;
    Ok(Optimized { result, selected })
}
