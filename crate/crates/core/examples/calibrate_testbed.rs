//! Fits the four-node testbed to its single-tier reference rows.
//!
//! ```text
//! cargo run --release --example calibrate_testbed            # print the fit
//! cargo run --release --example calibrate_testbed -- DIR     # also write topology.json + workload.json
//! ```

use edgeroute::cli::write_new;
use edgeroute::domain::save_topology;
use edgeroute::sim::calibration::{calibrate_testbed, testbed_workload};

fn main() -> edgeroute::Result<()> {
    let report = calibrate_testbed()?;
    println!("quality-shift rounds: {}", report.rounds);
    println!("{:<28} {:>10} {:>12} {:>10}", "model", "decode/s", "$/Mtok", "quality");
    for m in report.topology.models() {
        let q: Vec<String> = m.quality_profile.values().map(|p| format!("{:.4}", p.mean)).collect();
        println!(
            "{:<28} {:>10.3} {:>12.6} {:>10}",
            m.id,
            m.decode_rate,
            m.price_per_million_tokens,
            q.join("/")
        );
    }
    for s in [&report.cloud_only, &report.edge_only] {
        println!(
            "{:<12} quality {:.4}  rt {:.4} s  cost {:.3e}",
            s.router_name, s.avg_quality, s.avg_response_time, s.avg_cost
        );
    }

    if let Some(dir) = std::env::args_os().nth(1).map(std::path::PathBuf::from) {
        write_new(&dir.join("topology.json"), &(save_topology(&report.topology) + "\n"))?;
        write_new(&dir.join("workload.json"), &(testbed_workload().to_json() + "\n"))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
