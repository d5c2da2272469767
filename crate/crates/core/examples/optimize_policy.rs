//! Evolves threshold policies against the simulator and compares the
//! weights-selected policy with the baselines.
//!
//! `cargo run --release --example optimize_policy -- [seed]`

use edgeroute::cli::{optimize_thresholds, OptimizeSettings};
use edgeroute::domain::generate_workload;
use edgeroute::metrics::overall_scores;
use edgeroute::moo::EvolutionConfig;
use edgeroute::policy::{Baseline, Router};
use edgeroute::sim::calibration::{calibrate_testbed, testbed_workload};
use edgeroute::sim::{run_simulation, SimConfig};

fn main() -> edgeroute::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let topology = calibrate_testbed()?.topology;
    let requests = generate_workload(&testbed_workload(), seed)?;
    let settings = OptimizeSettings {
        evolution: EvolutionConfig {
            seed,
            parallel: true,
            ..EvolutionConfig::default()
        },
        seed,
        ..OptimizeSettings::default()
    };

    let optimized = optimize_thresholds(&topology, &requests, &settings, |s| {
        if s.generation % 20 == 0 {
            println!("{s}");
        }
    })?;
    let policy = optimized.policy(&settings);
    println!("\n{} Pareto-optimal policies; selected #{}:", optimized.result.pareto.len(), optimized.selected);
    println!("{:#?}\n", policy.thresholds);

    let mut routers: Vec<Box<dyn Router>> = Vec::new();
    for b in Baseline::ALL {
        routers.push(Box::new(b.build(&topology, seed)?));
    }
    routers.push(Box::new(policy.router(&topology, seed)?));
    let mut summaries = Vec::new();
    for r in &mut routers {
        summaries.push(run_simulation(&SimConfig::closed(1, seed), &topology, &requests, r.as_mut())?.summary);
    }
    for s in overall_scores(&summaries)? {
        println!(
            "{:<12} quality {:.4}  rt {:.4} s  cost {:.3e}  overall {:.4}",
            s.router_name,
            s.avg_quality,
            s.avg_response_time,
            s.avg_cost,
            s.overall.unwrap()
        );
    }
    Ok(())
}
