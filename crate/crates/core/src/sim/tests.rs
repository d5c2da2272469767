use super::*;
use crate::domain::{ModelKind, NodePair, RequestCategory, Tier, Topology};
use crate::metrics::{request_cost, stable_mean};
use crate::moo::AssignmentGenome;
use crate::policy::{AssignmentRouter, Baseline, DecisionReason};
use crate::test_support::{model, node, request, testbed};

fn everything_on(t: &Topology, pair: NodePair, n: usize) -> AssignmentRouter {
    AssignmentRouter::new(t, AssignmentGenome { assignments: vec![pair; n] }).unwrap()
}

fn mixed(n: u64) -> Vec<crate::domain::InferenceRequest> {
    (0..n)
        .map(|i| request(i, RequestCategory::DATASET[i as usize % 4], 20 + (i as u32 * 37) % 300, 5 + (i as u32 * 13) % 80))
        .collect()
}

#[test]
fn single_request_decomposes_exactly() {
    let mut c = node("cloud-0", Tier::Cloud, &["large"]);
    c.latency_to_node = 0.0;
    c.latency_from_node = 0.0;
    let t = Topology::new(vec![c], vec![model("large", ModelKind::Large)]).unwrap();
    let reqs = vec![request(0, RequestCategory::Code, 100, 20)];
    let mut r = Baseline::CloudOnly.build(&t, 0).unwrap();
    let out = run_simulation(&SimConfig::closed(1, 0), &t, &reqs, &mut r).unwrap();
    let rec = &out.trace[0];
    let uplink = 400.0 / 1e6;
    let downlink = 80.0 / 1e6;
    let infer = 100.0 / 100.0 + 20.0 / 10.0;
    assert_eq!(rec.uplink, uplink);
    assert_eq!(rec.downlink, downlink);
    assert_eq!(rec.inference_time, infer);
    assert_eq!(rec.queue_wait, 0.0);
    assert_eq!(rec.response_time, uplink + 0.0 + infer + downlink);
    assert_eq!(rec.cost, request_cost(120, 0.1));
    assert_eq!(out.overflow_count, 0);
}

#[test]
fn more_concurrency_shortens_makespan_on_symmetric_nodes() {
    // four identical single-slot nodes, requests spread evenly
    let models = vec![model("large", ModelKind::Large)];
    let nodes = (0..4)
        .map(|j| node(&format!("n{j}"), if j == 0 { Tier::Cloud } else { Tier::Edge }, &["large"]))
        .collect();
    let t = Topology::new(nodes, models).unwrap();
    let reqs: Vec<_> = (0..40).map(|i| request(i, RequestCategory::Reading, 100, 10)).collect();
    let run = |c: u32| {
        let mut rr = Baseline::RoundRobin.build(&t, 0).unwrap();
        run_simulation(&SimConfig::closed(c, 0), &t, &reqs, &mut rr).unwrap()
    };
    let (one, four) = (run(1), run(4));
    assert!(four.makespan < one.makespan / 3.0);
    assert!((four.summary.avg_response_time - one.summary.avg_response_time).abs() < 1e-9);
}

#[test]
fn snapshot_counts_slots_and_queue() {
    let mut t_nodes = vec![node("cloud-0", Tier::Cloud, &["large"]), node("edge-0", Tier::Edge, &["large"])];
    t_nodes[1].max_concurrent = 3;
    t_nodes[1].queue_limit = 10;
    let t = Topology::new(t_nodes, vec![model("large", ModelKind::Large)]).unwrap();
    let edge = NodePair { node: 1, model: 0 };
    let reqs: Vec<_> = (0..5).map(|i| request(i, RequestCategory::Math, 100, 500)).collect();

    let mut r = everything_on(&t, edge, 5);
    let sim = Simulator::new(SimConfig::closed(5, 0), &t, &reqs, &mut r).unwrap();
    assert_eq!(sim.snapshot().queue_lengths, vec![0, 0]);
    drop(sim);

    for (k, queued) in [(2usize, 0u32), (3, 0), (5, 2)] {
        let mut r = everything_on(&t, edge, 5);
        let mut sim = Simulator::new(SimConfig::closed(k as u32, 0), &t, &reqs[..k], &mut r).unwrap();
        sim.run_until(1.0).unwrap();
        let s = sim.snapshot();
        assert_eq!(s.in_flight[1], k.min(3) as u32);
        assert_eq!(s.queue_lengths[1], queued);
        sim.finish().unwrap();
    }
}

#[test]
fn full_node_redirects_to_cloud() {
    let t = testbed();
    // edge-0 holds one in service plus four queued
    let edge = NodePair { node: 1, model: 1 };
    let reqs = mixed(8);
    let mut r = everything_on(&t, edge, 8);
    let out = run_simulation(&SimConfig::closed(8, 0), &t, &reqs, &mut r).unwrap();
    assert_eq!(out.overflow_count, 3);
    let redirected: Vec<_> = out.trace.iter().filter(|r| r.redirected).collect();
    assert_eq!(redirected.len(), 3);
    assert!(redirected.iter().all(|r| r.node_id == "cloud-0" && r.assigned_model == "large"));
    assert!(out.trace.iter().all(|r| r.reason == DecisionReason::Direct));
}

#[test]
fn trace_conserves_requests_and_aggregates() {
    let t = testbed();
    let reqs = mixed(97);
    for baseline in Baseline::ALL {
        for c in [1, 4, 10] {
            let mut r = baseline.build(&t, 3).unwrap();
            let out = run_simulation(&SimConfig::closed(c, 3), &t, &reqs, &mut r).unwrap();
            let ids: Vec<u64> = out.trace.iter().map(|r| r.global_index).collect();
            assert_eq!(ids, (0..97).collect::<Vec<_>>());
            for rec in &out.trace {
                assert_eq!(rec.response_time, rec.breakdown().total);
                assert!(rec.response_time >= rec.inference_time);
                assert!(rec.queue_wait >= 0.0);
                assert!(rec.admitted_at < rec.finished_at);
                assert_eq!(rec.cost, request_cost(rec.total_tokens, rec.price_per_million_tokens));
            }
            let q: Vec<f64> = out.trace.iter().map(|r| r.quality).collect();
            assert_eq!(out.objectives.rq + stable_mean(&q).unwrap(), 1.0);
            let costs: Vec<f64> = out.trace.iter().map(|r| r.cost).collect();
            assert!((out.summary.avg_cost - costs.iter().sum::<f64>() / 97.0).abs() < 1e-12);
        }
    }
}

#[test]
fn rerun_gives_identical_trace() {
    let t = testbed();
    let reqs = mixed(60);
    let run = || {
        let mut r = Baseline::Random.build(&t, 5).unwrap();
        trace_to_jsonl(&run_simulation(&SimConfig::closed(4, 5), &t, &reqs, &mut r).unwrap().trace)
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(trace_to_jsonl(&trace_from_jsonl(&a).unwrap()), a);
}

#[test]
fn empty_workload_and_zero_concurrency_rejected() {
    let t = testbed();
    let mut r = Baseline::CloudOnly.build(&t, 0).unwrap();
    assert!(run_simulation(&SimConfig::closed(1, 0), &t, &[], &mut r).is_err());
    assert!(run_simulation(&SimConfig::closed(0, 0), &t, &mixed(3), &mut r).is_err());
}

#[test]
fn undeployed_pair_aborts() {
    let t = testbed();
    let mut r = AssignmentRouter::new(&t, AssignmentGenome { assignments: vec![] }).unwrap();
    let err = run_simulation(&SimConfig::closed(1, 0), &t, &mixed(1), &mut r).unwrap_err();
    assert!(matches!(err, crate::Error::Unroutable { request_id: 0, .. }), "{err}");
}

#[test]
fn open_loop_respects_arrival_times() {
    let t = testbed();
    let mut reqs = mixed(10);
    for (i, r) in reqs.iter_mut().enumerate() {
        r.arrival_time = 100.0 * i as f64;
    }
    let mut r = Baseline::CloudOnly.build(&t, 0).unwrap();
    let cfg = SimConfig { open_loop: true, ..SimConfig::closed(1, 0) };
    let out = run_simulation(&cfg, &t, &reqs, &mut r).unwrap();
    for (rec, req) in out.trace.iter().zip(&reqs) {
        assert_eq!(rec.admitted_at, req.arrival_time);
        assert_eq!(rec.queue_wait, 0.0);
    }
}
