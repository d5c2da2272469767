//! Min-max normalizes five routers' averages and combines them into the
//! composite `overall` score. Rows are the reported testbed measurements.

use edgeroute::metrics::{overall_scores, RouterSummary};

fn main() -> edgeroute::Result<()> {
    let rows = [
        RouterSummary::new("cloud_only", 0.5736, 1.0624, 1.13e-4),
        RouterSummary::new("edge_only", 0.4207, 3.9673, 9.00e-6),
        RouterSummary::new("random", 0.4361, 2.3571, 5.71e-5),
        RouterSummary::new("round_robin", 0.4618, 2.4971, 6.16e-5),
        RouterSummary::new("proposed", 0.5462, 1.1137, 7.36e-5),
    ];
    println!("{:<12} {:>8} {:>8} {:>10} {:>8}", "router", "quality", "rt_s", "cost", "overall");
    for s in overall_scores(&rows)? {
        println!(
            "{:<12} {:>8.4} {:>8.4} {:>10.2e} {:>8.4}",
            s.router_name,
            s.avg_quality,
            s.avg_response_time,
            s.avg_cost,
            s.overall.unwrap()
        );
    }
    Ok(())
}
