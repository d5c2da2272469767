//! Draws the 500-request testbed workload and prints per-category token
//! statistics plus the first few requests of the round-robin sequence.

use edgeroute::domain::{generate_workload, RequestCategory};
use edgeroute::sim::calibration::{testbed_workload, TESTBED_SEED};

fn main() -> edgeroute::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(TESTBED_SEED);
    let spec = testbed_workload();
    let requests = generate_workload(&spec, seed)?;
    println!("{} requests (seed {seed})\n", requests.len());

    println!("{:<12} {:>6} {:>12} {:>14} {:>11}", "category", "n", "mean prompt", "mean response", "constrained");
    for c in RequestCategory::DATASET {
        let rs: Vec<_> = requests.iter().filter(|r| r.category == c).collect();
        let n = rs.len() as f64;
        println!(
            "{:<12} {:>6} {:>12.1} {:>14.1} {:>10.0}%",
            c.as_str(),
            rs.len(),
            rs.iter().map(|r| f64::from(r.prompt_tokens)).sum::<f64>() / n,
            rs.iter().map(|r| f64::from(r.expected_response_tokens)).sum::<f64>() / n,
            100.0 * rs.iter().filter(|r| r.has_output_constraint).count() as f64 / n,
        );
    }

    println!("\nfirst requests:");
    for r in requests.iter().take(6) {
        println!(
            "  #{:<3} {:<12} prompt {:>4}  response {:>4}  sentences {:>2}  {} B up / {} B down",
            r.id,
            r.category.as_str(),
            r.prompt_tokens,
            r.expected_response_tokens,
            r.sentence_count,
            r.query_size_bytes,
            r.response_size_bytes
        );
    }
    Ok(())
}
