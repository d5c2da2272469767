//! Replays the checked-in proposed policy at concurrency 1, 4, 8 and 10.

use std::path::Path;

use edgeroute::domain::generate_workload;
use edgeroute::policy::PolicyDocument;
use edgeroute::sim::calibration::{calibrate_testbed, testbed_workload, TESTBED_SEED};
use edgeroute::sim::{run_simulation, SimConfig};

fn main() -> edgeroute::Result<()> {
    let topology = calibrate_testbed()?.topology;
    let requests = generate_workload(&testbed_workload(), TESTBED_SEED)?;
    let policy = PolicyDocument::read(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper-testbed/proposed-policy.json"),
    )?;

    println!("{:>3} {:>8} {:>8} {:>10} {:>10} {:>9}", "c", "quality", "rt_s", "cost", "makespan", "overflow");
    for c in [1, 4, 8, 10] {
        let mut router = policy.router(&topology, TESTBED_SEED)?;
        let out = run_simulation(&SimConfig::closed(c, TESTBED_SEED), &topology, &requests, &mut router)?;
        println!(
            "{c:>3} {:>8.4} {:>8.4} {:>10.3e} {:>10.1} {:>9}",
            out.summary.avg_quality, out.summary.avg_response_time, out.summary.avg_cost, out.makespan, out.overflow_count
        );
    }
    Ok(())
}
