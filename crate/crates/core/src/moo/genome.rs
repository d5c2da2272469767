use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::engine::{EvolutionConfig, GenomeOps};
use super::operators::{polynomial_mutation, sbx_crossover, Bounds};
use crate::domain::{InferenceRequest, NodePair, Tier, Topology};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// One `(node, model)` pair per request of a fixed workload.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssignmentGenome {
    pub assignments: Vec<NodePair>,
}

impl AssignmentGenome {
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn is_valid(&self, topology: &Topology) -> bool {
        self.assignments.iter().all(|&p| topology.contains(p))
    }
}

/// Uniform crossover: with probability `p_cx`, every position is swapped
/// independently with probability 0.5; otherwise the children are copies.
pub fn crossover_assignment<R: Rng + ?Sized>(
    a: &AssignmentGenome,
    b: &AssignmentGenome,
    rng: &mut R,
    p_cx: f64,
) -> Result<(AssignmentGenome, AssignmentGenome)> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "cannot cross genomes of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (mut c1, mut c2) = (a.clone(), b.clone());
    if rng.random_bool(p_cx) {
        for i in 0..a.len() {
            if rng.random_bool(0.5) {
                std::mem::swap(&mut c1.assignments[i], &mut c2.assignments[i]);
            }
        }
    }
    Ok((c1, c2))
}

/// With probability `p_mut`, resamples `ceil(fraction * len)` distinct
/// positions uniformly from `space`.
pub fn mutate_assignment<R: Rng + ?Sized>(
    mut genome: AssignmentGenome,
    rng: &mut R,
    p_mut: f64,
    fraction: f64,
    space: &[NodePair],
) -> Result<AssignmentGenome> {
    if space.is_empty() {
        return Err(Error::Domain("solution space is empty".into()));
    }
    if genome.is_empty() || !rng.random_bool(p_mut) {
        return Ok(genome);
    }
    let count = ((fraction * genome.len() as f64).ceil() as usize).clamp(1, genome.len());
    for pos in index::sample(rng, genome.len(), count) {
        genome.assignments[pos] = space[rng.random_range(0..space.len())];
    }
    Ok(genome)
}

/// Operators for [`AssignmentGenome`] over one workload.
///
/// Initial genomes lean towards the edge for short prompts: requests below
/// the median prompt length pick an edge pair with probability
/// `edge_bias`, everything else is uniform over the solution space.
#[derive(Debug, Clone)]
pub struct AssignmentOps {
    space: Vec<NodePair>,
    edge_pairs: Vec<NodePair>,
    light: Vec<bool>,
    pub edge_bias: f64,
}

impl AssignmentOps {
    pub fn new(topology: &Topology, requests: &[InferenceRequest]) -> Self {
        let space = topology.solution_space().to_vec();
        let edge_pairs = space
            .iter()
            .copied()
            .filter(|p| topology.node(p.node).tier == Tier::Edge)
            .collect();
        let mut lengths: Vec<u32> = requests.iter().map(|r| r.prompt_tokens).collect();
        lengths.sort_unstable();
        let median = if lengths.is_empty() {
            0.0
        } else if lengths.len() % 2 == 1 {
            f64::from(lengths[lengths.len() / 2])
        } else {
            (f64::from(lengths[lengths.len() / 2 - 1]) + f64::from(lengths[lengths.len() / 2])) / 2.0
        };
        let light = requests
            .iter()
            .map(|r| f64::from(r.prompt_tokens) < median)
            .collect();
        AssignmentOps {
            space,
            edge_pairs,
            light,
            edge_bias: 0.7,
        }
    }

    pub fn space(&self) -> &[NodePair] {
        &self.space
    }
}

impl GenomeOps for AssignmentOps {
    type Genome = AssignmentGenome;

    fn initial(&self, _index: usize, rng: &mut StreamRng) -> AssignmentGenome {
        let assignments = self
            .light
            .iter()
            .map(|&light| {
                if light && !self.edge_pairs.is_empty() && rng.random_bool(self.edge_bias) {
                    self.edge_pairs[rng.random_range(0..self.edge_pairs.len())]
                } else {
                    self.space[rng.random_range(0..self.space.len())]
                }
            })
            .collect();
        AssignmentGenome { assignments }
    }

    fn crossover(
        &self,
        a: &AssignmentGenome,
        b: &AssignmentGenome,
        config: &EvolutionConfig,
        rng: &mut StreamRng,
    ) -> (AssignmentGenome, AssignmentGenome) {
        crossover_assignment(a, b, rng, config.crossover_probability)
            .expect("genomes built by the same operators share a length")
    }

    fn mutate(&self, genome: AssignmentGenome, config: &EvolutionConfig, rng: &mut StreamRng) -> AssignmentGenome {
        mutate_assignment(
            genome,
            rng,
            config.mutation_probability,
            config.mutation_fraction,
            &self.space,
        )
        .expect("topology guarantees a nonempty solution space")
    }
}

/// The six runtime routing thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdGenome {
    /// Complexity below which predicted-code requests stay on the edge.
    pub d_code: f64,
    pub d_math: f64,
    /// Complexity threshold for every other predicted category.
    pub d_general: f64,
    /// Largest edge queue length still accepting requests.
    pub q_limit: u32,
    /// Classifier confidence needed to pick the coder model.
    pub t_code: f64,
    pub t_math: f64,
}

impl Default for ThresholdGenome {
    fn default() -> Self {
        ThresholdGenome {
            d_code: 0.5,
            d_math: 0.5,
            d_general: 0.5,
            q_limit: 5,
            t_code: 0.7,
            t_math: 0.7,
        }
    }
}

impl ThresholdGenome {
    pub const GENES: usize = 6;

    pub fn to_genes(&self) -> [f64; 6] {
        [
            self.d_code,
            self.d_math,
            self.d_general,
            f64::from(self.q_limit),
            self.t_code,
            self.t_math,
        ]
    }

    /// Clamps every gene into range and rounds the queue limit.
    pub fn from_genes(genes: [f64; 6], q_max: u32) -> Self {
        let unit = |x: f64| x.clamp(0.0, 1.0);
        ThresholdGenome {
            d_code: unit(genes[0]),
            d_math: unit(genes[1]),
            d_general: unit(genes[2]),
            q_limit: genes[3].round().clamp(0.0, f64::from(q_max)) as u32,
            t_code: unit(genes[4]),
            t_math: unit(genes[5]),
        }
    }

    pub fn is_valid(&self, q_max: u32) -> bool {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        unit(self.d_code)
            && unit(self.d_math)
            && unit(self.d_general)
            && unit(self.t_code)
            && unit(self.t_math)
            && self.q_limit <= q_max
    }
}

/// SBX and polynomial mutation over the threshold genes.
#[derive(Debug, Clone)]
pub struct ThresholdOps {
    pub q_max: u32,
    bounds: [Bounds; 6],
}

impl Default for ThresholdOps {
    fn default() -> Self {
        ThresholdOps::new(64)
    }
}

impl ThresholdOps {
    pub fn new(q_max: u32) -> Self {
        let u = Bounds::UNIT;
        ThresholdOps {
            q_max,
            bounds: [u, u, u, Bounds::new(0.0, f64::from(q_max)), u, u],
        }
    }

    pub fn crossover_threshold<R: Rng + ?Sized>(
        &self,
        a: &ThresholdGenome,
        b: &ThresholdGenome,
        config: &EvolutionConfig,
        rng: &mut R,
    ) -> (ThresholdGenome, ThresholdGenome) {
        if !rng.random_bool(config.crossover_probability) {
            return (*a, *b);
        }
        let (mut x, mut y) = (a.to_genes(), b.to_genes());
        sbx_crossover(&mut x, &mut y, &self.bounds, config.sbx_eta, rng);
        (
            ThresholdGenome::from_genes(x, self.q_max),
            ThresholdGenome::from_genes(y, self.q_max),
        )
    }

    pub fn mutate_threshold<R: Rng + ?Sized>(
        &self,
        genome: ThresholdGenome,
        config: &EvolutionConfig,
        rng: &mut R,
    ) -> ThresholdGenome {
        if !rng.random_bool(config.mutation_probability) {
            return genome;
        }
        let mut genes = genome.to_genes();
        let per_gene = 1.0 / ThresholdGenome::GENES as f64;
        polynomial_mutation(&mut genes, &self.bounds, config.pm_eta, per_gene, rng);
        ThresholdGenome::from_genes(genes, self.q_max)
    }
}

impl GenomeOps for ThresholdOps {
    type Genome = ThresholdGenome;

    fn initial(&self, _index: usize, rng: &mut StreamRng) -> ThresholdGenome {
        let genes = std::array::from_fn(|k| {
            let b = self.bounds[k];
            b.lower + rng.random::<f64>() * (b.upper - b.lower)
        });
        ThresholdGenome::from_genes(genes, self.q_max)
    }

    fn crossover(
        &self,
        a: &ThresholdGenome,
        b: &ThresholdGenome,
        config: &EvolutionConfig,
        rng: &mut StreamRng,
    ) -> (ThresholdGenome, ThresholdGenome) {
        self.crossover_threshold(a, b, config, rng)
    }

    fn mutate(&self, genome: ThresholdGenome, config: &EvolutionConfig, rng: &mut StreamRng) -> ThresholdGenome {
        self.mutate_threshold(genome, config, rng)
    }
}

/// Plain real vectors in a box; used for benchmark problems.
#[derive(Debug, Clone)]
pub struct RealVectorOps {
    bounds: Vec<Bounds>,
}

impl RealVectorOps {
    pub fn new(bounds: Vec<Bounds>) -> Self {
        RealVectorOps { bounds }
    }
}

impl GenomeOps for RealVectorOps {
    type Genome = Vec<f64>;

    fn initial(&self, _index: usize, rng: &mut StreamRng) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|b| b.lower + rng.random::<f64>() * (b.upper - b.lower))
            .collect()
    }

    fn crossover(&self, a: &Vec<f64>, b: &Vec<f64>, config: &EvolutionConfig, rng: &mut StreamRng) -> (Vec<f64>, Vec<f64>) {
        let (mut x, mut y) = (a.clone(), b.clone());
        if rng.random_bool(config.crossover_probability) {
            sbx_crossover(&mut x, &mut y, &self.bounds, config.sbx_eta, rng);
        }
        (x, y)
    }

    fn mutate(&self, mut genome: Vec<f64>, config: &EvolutionConfig, rng: &mut StreamRng) -> Vec<f64> {
        if rng.random_bool(config.mutation_probability) {
            let per_gene = 1.0 / self.bounds.len() as f64;
            polynomial_mutation(&mut genome, &self.bounds, config.pm_eta, per_gene, rng);
        }
        genome
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn pairs(n: usize) -> Vec<NodePair> {
        (0..n).map(|m| NodePair { node: 0, model: m }).collect()
    }

    fn genome(len: usize, model: usize) -> AssignmentGenome {
        AssignmentGenome {
            assignments: vec![NodePair { node: 0, model }; len],
        }
    }

    #[test]
    fn crossover_without_probability_copies() {
        let mut r = rng::stream(&[1]);
        let (a, b) = (genome(10, 0), genome(10, 1));
        let (c1, c2) = crossover_assignment(&a, &b, &mut r, 0.0).unwrap();
        assert_eq!((c1, c2), (a, b));
    }

    #[test]
    fn crossover_identical_parents() {
        let mut r = rng::stream(&[2]);
        let a = genome(10, 3);
        let (c1, c2) = crossover_assignment(&a, &a, &mut r, 1.0).unwrap();
        assert_eq!(c1, a);
        assert_eq!(c2, a);
    }

    #[test]
    fn crossover_length_mismatch() {
        let mut r = rng::stream(&[3]);
        assert!(crossover_assignment(&genome(3, 0), &genome(4, 0), &mut r, 1.0).is_err());
    }

    #[test]
    fn uniform_crossover_swaps_about_half() {
        let mut r = rng::stream(&[4]);
        let (a, b) = (genome(100, 0), genome(100, 1));
        let trials = 200;
        let swapped: usize = (0..trials)
            .map(|_| {
                let (c1, _) = crossover_assignment(&a, &b, &mut r, 1.0).unwrap();
                c1.assignments.iter().filter(|p| p.model == 1).count()
            })
            .sum();
        let mean = swapped as f64 / trials as f64;
        assert!((35.0..=65.0).contains(&mean), "mean swapped {mean}");
    }

    #[test]
    fn mutation_examples() {
        let mut r = rng::stream(&[5]);
        let g = genome(100, 0);
        assert_eq!(mutate_assignment(g.clone(), &mut r, 0.0, 0.5, &pairs(3)).unwrap(), g);
        let single = pairs(1);
        assert_eq!(mutate_assignment(g.clone(), &mut r, 1.0, 1.0, &single).unwrap(), g);
        assert!(mutate_assignment(g.clone(), &mut r, 1.0, 0.1, &[]).is_err());
    }

    #[test]
    fn mutation_touches_exactly_ceil_fraction_positions() {
        // the replacement pool never contains the original pair, so every
        // resampled position is visible
        let mut r = rng::stream(&[6]);
        let pool: Vec<NodePair> = (1..4).map(|m| NodePair { node: 0, model: m }).collect();
        for _ in 0..50 {
            let m = mutate_assignment(genome(100, 0), &mut r, 1.0, 0.1, &pool).unwrap();
            assert_eq!(m.assignments.iter().filter(|p| p.model != 0).count(), 10);
            let m = mutate_assignment(genome(7, 0), &mut r, 1.0, 0.1, &pool).unwrap();
            assert_eq!(m.assignments.iter().filter(|p| p.model != 0).count(), 1);
        }
    }

    #[test]
    fn threshold_identity_and_bounds() {
        let ops = ThresholdOps::default();
        let mut r = rng::stream(&[7]);
        let cfg = EvolutionConfig {
            mutation_probability: 0.0,
            ..EvolutionConfig::default()
        };
        let g = ThresholdGenome::default();
        assert_eq!(ops.mutate_threshold(g, &cfg, &mut r), g);

        let cfg = EvolutionConfig {
            crossover_probability: 1.0,
            ..EvolutionConfig::default()
        };
        assert_eq!(ops.crossover_threshold(&g, &g, &cfg, &mut r), (g, g));

        let cfg = EvolutionConfig {
            mutation_probability: 1.0,
            pm_eta: 1.0,
            ..EvolutionConfig::default()
        };
        let mut x = g;
        for _ in 0..1000 {
            x = ops.mutate_threshold(x, &cfg, &mut r);
            assert!(x.is_valid(64));
        }
    }

    #[test]
    fn from_genes_clamps_and_rounds() {
        let g = ThresholdGenome::from_genes([-0.5, 1.5, 0.3, 7.6, 2.0, 0.2], 64);
        assert_eq!(g.d_code, 0.0);
        assert_eq!(g.d_math, 1.0);
        assert_eq!(g.q_limit, 8);
        assert_eq!(g.t_code, 1.0);
        assert_eq!(ThresholdGenome::from_genes([0.0, 0.0, 0.0, 99.0, 0.0, 0.0], 64).q_limit, 64);
    }

    proptest::proptest! {
        #[test]
        fn threshold_offspring_always_valid(seed in 0u64..500) {
            let ops = ThresholdOps::new(16);
            let cfg = EvolutionConfig { crossover_probability: 1.0, mutation_probability: 1.0, ..EvolutionConfig::default() };
            let mut r = rng::stream(&[seed]);
            let a = ops.initial(0, &mut r);
            let b = ops.initial(1, &mut r);
            let (c, d) = ops.crossover(&a, &b, &cfg, &mut r);
            proptest::prop_assert!(ops.mutate(c, &cfg, &mut r).is_valid(16));
            proptest::prop_assert!(ops.mutate(d, &cfg, &mut r).is_valid(16));
        }
    }
}
