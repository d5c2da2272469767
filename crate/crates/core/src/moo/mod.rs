//! NSGA-II: non-dominated sorting, crowding distance, binary tournaments,
//! elitist truncation, plus the genome encodings used for routing policies.

mod engine;
mod genome;
mod hypervolume;
mod operators;
mod sort;

pub use engine::{
    evolve, evolve_with, select_policy, EvolutionConfig, EvolutionResult, GenerationStats,
    GenomeOps, Individual, ParetoEntry,
};
pub use genome::{
    crossover_assignment, mutate_assignment, AssignmentGenome, AssignmentOps, RealVectorOps,
    ThresholdGenome, ThresholdOps,
};
pub use hypervolume::hypervolume;
pub use operators::{binary_tournament, polynomial_mutation, sbx_crossover, Bounds};
pub use sort::{crowding_distance, dominates, non_dominated_sort};
