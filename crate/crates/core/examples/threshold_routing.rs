//! Routes a handful of requests with a threshold policy and shows the
//! features each decision was based on.

use edgeroute::domain::generate_workload;
use edgeroute::moo::ThresholdGenome;
use edgeroute::policy::{decide, extract_features, ClassifierConfig, ComplexityConfig, SystemState, ThresholdContext};
use edgeroute::sim::calibration::{calibrate_testbed, testbed_workload};

fn main() -> edgeroute::Result<()> {
    let topology = calibrate_testbed()?.topology;
    let requests = generate_workload(&testbed_workload(), 7)?;
    let genome = ThresholdGenome {
        d_code: 0.55,
        d_math: 0.3,
        d_general: 0.35,
        q_limit: 2,
        t_code: 0.6,
        t_math: 0.6,
    };
    let classifier = ClassifierConfig::default();
    let complexity = ComplexityConfig::default();
    let ctx = ThresholdContext {
        classifier: &classifier,
        complexity: &complexity,
        seed: 7,
        high_capacity: topology.high_capacity_pair()?,
    };

    // Edge queues fill up as we go so the last requests hit the queue limit.
    let mut state = SystemState::idle(&topology);
    println!("{:<4} {:<12} {:<12} {:>6} {:>6}  {:<22} target", "id", "true", "predicted", "c", "p", "reason");
    for r in requests.iter().take(12) {
        let f = extract_features(r, &state, &ctx);
        let d = decide(&f, &genome, &topology, ctx.high_capacity);
        let (node, model) = topology.describe(d.pair);
        println!(
            "{:<4} {:<12} {:<12} {:>6.3} {:>6.3}  {:<22} {node}/{model}",
            r.id,
            r.category.as_str(),
            f.predicted_category.as_str(),
            f.complexity,
            f.confidence,
            d.reason.as_str(),
        );
        if topology.node(d.pair.node).tier == edgeroute::domain::Tier::Edge {
            state.queue_lengths[d.pair.node] += 1;
        }
    }
    Ok(())
}
