//! Runs the four baseline routers through the simulator on the calibrated
//! testbed and prints their summaries and per-category quality.

use edgeroute::domain::{generate_workload, RequestCategory};
use edgeroute::metrics::overall_scores;
use edgeroute::policy::Baseline;
use edgeroute::sim::calibration::{calibrate_testbed, testbed_workload, TESTBED_SEED};
use edgeroute::sim::{run_simulation, SimConfig};

fn main() -> edgeroute::Result<()> {
    let topology = calibrate_testbed()?.topology;
    let requests = generate_workload(&testbed_workload(), TESTBED_SEED)?;
    let config = SimConfig::closed(1, TESTBED_SEED);

    let mut summaries = Vec::new();
    let mut per_category = Vec::new();
    for baseline in Baseline::ALL {
        let mut router = baseline.build(&topology, TESTBED_SEED)?;
        let out = run_simulation(&config, &topology, &requests, &mut router)?;
        summaries.push(out.summary);
        per_category.push(out.quality_by_category);
    }

    println!("{:<12} {:>8} {:>8} {:>10} {:>8}", "router", "quality", "rt_s", "cost", "overall");
    for s in overall_scores(&summaries)? {
        println!(
            "{:<12} {:>8.4} {:>8.4} {:>10.3e} {:>8.4}",
            s.router_name,
            s.avg_quality,
            s.avg_response_time,
            s.avg_cost,
            s.overall.unwrap()
        );
    }
    println!("\n{:<12} {:>8} {:>8} {:>8} {:>12}", "router", "code", "math", "reading", "commonsense");
    for (s, q) in summaries.iter().zip(&per_category) {
        let v = |c: RequestCategory| q.get(&c).copied().unwrap_or(f64::NAN);
        println!(
            "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>12.4}",
            s.router_name,
            v(RequestCategory::Code),
            v(RequestCategory::Math),
            v(RequestCategory::Reading),
            v(RequestCategory::Commonsense)
        );
    }
    Ok(())
}
