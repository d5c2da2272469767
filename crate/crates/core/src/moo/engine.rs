use std::fmt::Debug;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hypervolume::hypervolume;
use super::operators::binary_tournament;
use super::sort::{crowding_distance, non_dominated_sort};
use crate::error::{Error, Result};
use crate::metrics::{normalize_objectives, scalarize, ObjectiveVector, Weights};
use crate::rng::{self, tag, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    pub mutation_probability: f64,
    pub seed: u64,
    /// Share of requests reassigned by one assignment-genome mutation.
    pub mutation_fraction: f64,
    pub sbx_eta: f64,
    pub pm_eta: f64,
    /// Evaluate each generation on the rayon pool. Results are identical either way.
    pub parallel: bool,
    /// Weights for the per-generation "best scalarized" log column.
    pub weights: Weights,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 100,
            generations: 100,
            crossover_probability: 0.8,
            mutation_probability: 0.1,
            seed: 0,
            mutation_fraction: 0.1,
            sbx_eta: 15.0,
            pm_eta: 20.0,
            parallel: false,
            weights: Weights::equal(),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return Err(Error::validation("population_size", "must be even and >= 4"));
        }
        if self.generations < 1 {
            return Err(Error::validation("generations", "must be >= 1"));
        }
        for (field, p) in [
            ("crossover_probability", self.crossover_probability),
            ("mutation_probability", self.mutation_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(field, "must lie in [0, 1]"));
            }
        }
        if !(self.mutation_fraction > 0.0 && self.mutation_fraction <= 1.0) {
            return Err(Error::validation("mutation_fraction", "must lie in (0, 1]"));
        }
        if !(self.sbx_eta > 0.0 && self.pm_eta > 0.0) {
            return Err(Error::validation("sbx_eta/pm_eta", "must be positive"));
        }
        Ok(())
    }
}

/// Variation operators for one genome encoding.
pub trait GenomeOps: Sync {
    type Genome: Clone + PartialEq + Debug + Send + Sync;

    /// `index`-th member of the initial population.
    fn initial(&self, index: usize, rng: &mut StreamRng) -> Self::Genome;

    fn crossover(
        &self,
        a: &Self::Genome,
        b: &Self::Genome,
        config: &EvolutionConfig,
        rng: &mut StreamRng,
    ) -> (Self::Genome, Self::Genome);

    fn mutate(&self, genome: Self::Genome, config: &EvolutionConfig, rng: &mut StreamRng) -> Self::Genome;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<G> {
    pub genome: G,
    pub objectives: ObjectiveVector,
    pub front_rank: usize,
    pub crowding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoEntry<G> {
    pub genome: G,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub front0_size: usize,
    /// Lowest weighted sum over front 0 after min-max normalization within it.
    pub best_scalarized: f64,
    pub hypervolume: f64,
}

impl std::fmt::Display for GenerationStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "generation {:>4}  front0 {:>4}  best {:.6}  hypervolume {:.6e}",
            self.generation, self.front0_size, self.best_scalarized, self.hypervolume
        )
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult<G> {
    /// Final front 0, deduplicated by genome, in population order.
    pub pareto: Vec<ParetoEntry<G>>,
    pub history: Vec<GenerationStats>,
    /// Hypervolume reference point, fixed from the initial population.
    pub reference: ObjectiveVector,
}

/// Runs NSGA-II. See [`evolve_with`] for a per-generation hook.
pub fn evolve<O, F, E>(config: &EvolutionConfig, ops: &O, evaluator: F) -> Result<EvolutionResult<O::Genome>>
where
    O: GenomeOps,
    F: Fn(&O::Genome) -> std::result::Result<ObjectiveVector, E> + Sync,
    E: std::fmt::Display,
{
    evolve_with(config, ops, evaluator, |_, _| {})
}

/// Runs NSGA-II and calls `on_generation` after the initial population and
/// after every generation with its statistics and the ranked population.
///
/// Each offspring pair draws from its own stream keyed by
/// `(seed, generation, pair)`, so the run does not depend on whether
/// evaluation happens in parallel.
pub fn evolve_with<O, F, E, H>(
    config: &EvolutionConfig,
    ops: &O,
    evaluator: F,
    mut on_generation: H,
) -> Result<EvolutionResult<O::Genome>>
where
    O: GenomeOps,
    F: Fn(&O::Genome) -> std::result::Result<ObjectiveVector, E> + Sync,
    E: std::fmt::Display,
    H: FnMut(&GenerationStats, &[Individual<O::Genome>]),
{
    config.validate()?;
    let p = config.population_size;

    let initial: Vec<O::Genome> = (0..p)
        .map(|i| ops.initial(i, &mut rng::stream(&[config.seed, tag::EVOLUTION, tag::INIT, i as u64])))
        .collect();
    let objectives = evaluate_all(config, &initial, &evaluator)?;
    let mut population = rank(initial.into_iter().zip(objectives).collect());

    let reference = reference_point(&population);
    let mut history = Vec::with_capacity(config.generations + 1);
    let stats = generation_stats(0, &population, &reference, &config.weights);
    on_generation(&stats, &population);
    history.push(stats);

    for generation in 1..=config.generations {
        let offspring: Vec<O::Genome> = (0..p / 2)
            .flat_map(|pair| {
                let mut r = rng::stream(&[config.seed, tag::EVOLUTION, generation as u64, pair as u64]);
                let a = binary_tournament(&population, &mut r);
                let b = binary_tournament(&population, &mut r);
                let (c1, c2) = ops.crossover(&population[a].genome, &population[b].genome, config, &mut r);
                [ops.mutate(c1, config, &mut r), ops.mutate(c2, config, &mut r)]
            })
            .collect();
        let objectives = evaluate_all(config, &offspring, &evaluator)?;

        let mut pool: Vec<(O::Genome, ObjectiveVector)> = population
            .into_iter()
            .map(|ind| (ind.genome, ind.objectives))
            .collect();
        pool.extend(offspring.into_iter().zip(objectives));
        population = rank(truncate(pool, p));

        let stats = generation_stats(generation, &population, &reference, &config.weights);
        on_generation(&stats, &population);
        history.push(stats);
    }

    let mut pareto: Vec<ParetoEntry<O::Genome>> = Vec::new();
    for ind in population.into_iter().filter(|i| i.front_rank == 0) {
        if !pareto.iter().any(|e| e.genome == ind.genome) {
            pareto.push(ParetoEntry {
                genome: ind.genome,
                objectives: ind.objectives,
            });
        }
    }
    Ok(EvolutionResult {
        pareto,
        history,
        reference,
    })
}

fn evaluate_all<G, F, E>(config: &EvolutionConfig, genomes: &[G], evaluator: &F) -> Result<Vec<ObjectiveVector>>
where
    G: Debug + Sync,
    F: Fn(&G) -> std::result::Result<ObjectiveVector, E> + Sync,
    E: std::fmt::Display,
{
    let eval = |g: &G| -> Result<ObjectiveVector> {
        let o = evaluator(g).map_err(|e| Error::Evaluation(format!("{e} (genome {g:?})")))?;
        if !o.is_finite() {
            return Err(Error::NonFiniteObjective {
                genome: format!("{g:?}"),
            });
        }
        Ok(o)
    };
    if config.parallel {
        genomes.par_iter().map(eval).collect()
    } else {
        genomes.iter().map(eval).collect()
    }
}

/// Assigns front ranks and crowding distances.
fn rank<G>(members: Vec<(G, ObjectiveVector)>) -> Vec<Individual<G>> {
    let objectives: Vec<ObjectiveVector> = members.iter().map(|m| m.1).collect();
    let mut front_rank = vec![0; members.len()];
    let mut crowding = vec![0.0; members.len()];
    for (r, front) in non_dominated_sort(&objectives).iter().enumerate() {
        let points: Vec<ObjectiveVector> = front.iter().map(|&i| objectives[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&points)) {
            front_rank[i] = r;
            crowding[i] = d;
        }
    }
    members
        .into_iter()
        .enumerate()
        .map(|(i, (genome, objectives))| Individual {
            genome,
            objectives,
            front_rank: front_rank[i],
            crowding: crowding[i],
        })
        .collect()
}

/// Elitist (mu + lambda) selection: whole fronts while they fit, then the
/// most spread-out members of the first front that does not.
fn truncate<G>(pool: Vec<(G, ObjectiveVector)>, keep: usize) -> Vec<(G, ObjectiveVector)> {
    let objectives: Vec<ObjectiveVector> = pool.iter().map(|m| m.1).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(keep);
    for front in non_dominated_sort(&objectives) {
        if chosen.len() + front.len() <= keep {
            chosen.extend(front);
            if chosen.len() == keep {
                break;
            }
            continue;
        }
        let points: Vec<ObjectiveVector> = front.iter().map(|&i| objectives[i]).collect();
        let distance = crowding_distance(&points);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| distance[b].total_cmp(&distance[a]).then(a.cmp(&b)));
        chosen.extend(order.into_iter().take(keep - chosen.len()).map(|k| front[k]));
        break;
    }
    chosen.sort_unstable();
    let mut slots: Vec<Option<(G, ObjectiveVector)>> = pool.into_iter().map(Some).collect();
    chosen
        .into_iter()
        .map(|i| slots[i].take().expect("index chosen once"))
        .collect()
}

fn reference_point<G>(population: &[Individual<G>]) -> ObjectiveVector {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for ind in population {
        for (k, v) in ind.objectives.as_array().into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    ObjectiveVector::from_array(std::array::from_fn(|k| {
        let span = hi[k] - lo[k];
        let margin = if span > 0.0 { 0.1 * span } else { 0.1 * hi[k].abs().max(1.0) };
        hi[k] + margin
    }))
}

fn generation_stats<G>(
    generation: usize,
    population: &[Individual<G>],
    reference: &ObjectiveVector,
    weights: &Weights,
) -> GenerationStats {
    let front: Vec<ObjectiveVector> = population
        .iter()
        .filter(|i| i.front_rank == 0)
        .map(|i| i.objectives)
        .collect();
    let best_scalarized = normalize_objectives(&front)
        .iter()
        .map(|o| scalarize(o, weights))
        .fold(f64::INFINITY, f64::min);
    GenerationStats {
        generation,
        front0_size: front.len(),
        best_scalarized,
        hypervolume: hypervolume(&front, reference),
    }
}

/// Picks the entry minimizing the weighted sum of objectives normalized over
/// the set; ties go to the lowest index.
pub fn select_policy<G>(pareto: &[ParetoEntry<G>], weights: &Weights) -> Result<usize> {
    if pareto.is_empty() {
        return Err(Error::Domain("cannot select from an empty Pareto set".into()));
    }
    let points: Vec<ObjectiveVector> = pareto.iter().map(|e| e.objectives).collect();
    let scores: Vec<f64> = normalize_objectives(&points)
        .iter()
        .map(|o| scalarize(o, weights))
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(best)
}
