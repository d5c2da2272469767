//! NSGA-II on f1 = x^2, f2 = (x - 2)^2. The Pareto set is x in [0, 2].

use std::convert::Infallible;

use edgeroute::metrics::ObjectiveVector;
use edgeroute::moo::{evolve_with, Bounds, EvolutionConfig, RealVectorOps};

fn main() -> edgeroute::Result<()> {
    let config = EvolutionConfig {
        population_size: 40,
        generations: 50,
        seed: 1,
        ..EvolutionConfig::default()
    };
    let ops = RealVectorOps::new(vec![Bounds::new(-4.0, 6.0)]);
    let result = evolve_with(
        &config,
        &ops,
        |x: &Vec<f64>| Ok::<_, Infallible>(ObjectiveVector::new(x[0] * x[0], (x[0] - 2.0).powi(2), 0.0)),
        |stats, _| {
            if stats.generation % 10 == 0 {
                println!("{stats}");
            }
        },
    )?;

    let mut xs: Vec<f64> = result.pareto.iter().map(|e| e.genome[0]).collect();
    xs.sort_by(f64::total_cmp);
    println!("\n{} solutions, x in [{:.4}, {:.4}]", xs.len(), xs[0], xs[xs.len() - 1]);
    let gap = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    println!("largest gap along the front: {gap:.4}");
    Ok(())
}
