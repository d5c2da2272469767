use std::path::{Path, PathBuf};

use edgeroute::cli::{self, exit_code, Experiment, Overrides, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use edgeroute::domain::WorkloadSpec;
use edgeroute::metrics::summaries_from_csv;
use edgeroute::Error;
use serde_json::{json, Value};

fn testbed_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper-testbed")
}

/// Small experiment over the checked-in topology: 20 requests, tiny evolution.
fn manifest(routers: Value) -> Value {
    let workload: Value = serde_json::from_str(&WorkloadSpec::balanced(5, 3).to_json()).unwrap();
    json!({
        "schema_version": 1,
        "topology": testbed_dir().join("topology.json"),
        "workload": workload,
        "routers": routers,
        "concurrency_levels": [1, 4, 8, 10],
        "output_dir": "out",
        "seed": 5,
        "evolution": { "population_size": 8, "generations": 3 }
    })
}

fn write_manifest(dir: &Path, m: &Value) -> String {
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(m).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> i32 {
    cli::run(std::iter::once("edgeroute").chain(args.iter().copied()))
}

fn five_routers() -> Value {
    json!(["cloud_only", "edge_only", "random", "round_robin", { "name": "proposed" }])
}

#[test]
fn smoke_optimize_emits_policy_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &manifest(five_routers()));
    for dir in ["a", "b"] {
        let out = tmp.path().join(dir);
        let code = run(&["optimize", "--manifest", &m, "--out", out.to_str().unwrap(), "--population", "4", "--generations", "1"]);
        assert_eq!(code, EXIT_OK);
    }
    let pareto = |d: &str| std::fs::read_to_string(tmp.path().join(d).join("pareto.json")).unwrap();
    assert_eq!(pareto("a"), pareto("b"));
    let doc: Value = serde_json::from_str(&pareto("a")).unwrap();
    assert!(!doc["solutions"].as_array().unwrap().is_empty());
    let policy = std::fs::read_to_string(tmp.path().join("a/policy.json")).unwrap();
    edgeroute::policy::PolicyDocument::from_json(&policy).unwrap();
    let log = std::fs::read_to_string(tmp.path().join("a/evolution.log")).unwrap();
    assert_eq!(log.lines().count(), 2);
}

#[test]
fn assignment_genome_optimizes() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &manifest(five_routers()));
    let out = tmp.path().join("o");
    let code = run(&["optimize", "--manifest", &m, "--out", out.to_str().unwrap(), "--genome", "assignment"]);
    assert_eq!(code, EXIT_OK);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(out.join("assignment.json")).unwrap()).unwrap();
    assert_eq!(doc["assignments"].as_array().unwrap().len(), 20);
}

#[test]
fn unknown_router_lists_known_names() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &manifest(five_routers()));
    let exp = Experiment::load(&m, &Overrides::default()).unwrap();
    let err = cli::cmd_simulate(&exp, "fastest").unwrap_err();
    assert_eq!(exit_code(&err), EXIT_USAGE);
    let msg = err.to_string();
    for name in ["cloud_only", "edge_only", "random", "round_robin", "proposed"] {
        assert!(msg.contains(name), "{msg}");
    }
    assert_eq!(run(&["simulate", "--manifest", &m, "--router", "fastest"]), EXIT_USAGE);
}

#[test]
fn unknown_baseline_in_manifest_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &manifest(json!(["cloud_only", "fastest"])));
    assert_eq!(run(&["compare", "--manifest", &m]), EXIT_USAGE);
}

#[test]
fn single_router_compare_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &manifest(json!(["cloud_only"])));
    assert_eq!(run(&["compare", "--manifest", &m]), EXIT_USAGE);
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn empty_workload_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut m = manifest(five_routers());
    m["workload"]["total_requests"] = 0.into();
    for c in ["code", "math", "reading", "commonsense"] {
        m["workload"]["per_category_counts"][c] = 0.into();
    }
    let path = write_manifest(tmp.path(), &m);
    assert_eq!(run(&["simulate", "--manifest", &path, "--router", "cloud_only"]), EXIT_USAGE);
}

#[test]
fn bad_flags_and_missing_manifest_are_usage_errors() {
    assert_eq!(run(&["simulate", "--router", "x"]), EXIT_USAGE);
    assert_eq!(run(&["launch"]), EXIT_USAGE);
    assert_eq!(run(&["compare", "--manifest", "/nonexistent/manifest.json"]), EXIT_USAGE);
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn runtime_failures_map_to_exit_3() {
    let unroutable = Error::Unroutable {
        request_id: 4,
        message: "pair not deployed".into(),
    };
    assert_eq!(exit_code(&unroutable), EXIT_RUNTIME);
    assert_eq!(exit_code(&Error::NonFiniteObjective { genome: "g".into() }), EXIT_RUNTIME);
    assert_eq!(exit_code(&Error::Config("x".into())), EXIT_USAGE);
}

#[test]
fn identical_routers_both_score_one() {
    let tmp = tempfile::tempdir().unwrap();
    let policy = testbed_dir().join("proposed-policy.json");
    let m = write_manifest(
        tmp.path(),
        &manifest(json!([{ "name": "a", "policy": policy }, { "name": "b", "policy": policy }])),
    );
    let exp = Experiment::load(&m, &Overrides::default()).unwrap();
    let cmp = cli::cmd_compare(&exp).unwrap();
    assert!(cmp.summaries.iter().all(|s| s.overall == Some(1.0)));
}

#[test]
fn outputs_are_write_once() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &manifest(json!(["cloud_only", "edge_only"])));
    assert_eq!(run(&["compare", "--manifest", &m]), EXIT_OK);
    let before = std::fs::read(tmp.path().join("out/summary.csv")).unwrap();
    assert_eq!(run(&["compare", "--manifest", &m]), EXIT_USAGE);
    assert_eq!(std::fs::read(tmp.path().join("out/summary.csv")).unwrap(), before);
}

#[test]
fn report_on_compare_and_sweep_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &manifest(five_routers()));
    assert_eq!(run(&["compare", "--manifest", &m, "--concurrency", "1"]), EXIT_OK);
    assert_eq!(run(&["simulate", "--manifest", &m, "--router", "proposed"]), EXIT_OK);
    let out = tmp.path().join("out");
    let summary = summaries_from_csv(&std::fs::read_to_string(out.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(summary.len(), 5);
    assert!(summary.iter().all(|s| s.overall.is_some()));

    let files = cli::cmd_report(&out, &tmp.path().join("report")).unwrap();
    let matrix = std::fs::read_to_string(files.quality_matrix.unwrap()).unwrap();
    let rows: Vec<Vec<&str>> = matrix.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.len() == 5));
    let series = std::fs::read_to_string(files.concurrency_series.unwrap()).unwrap();
    let levels: Vec<&str> = series.lines().skip(1).map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(levels, ["1", "4", "8", "10"]);
    assert_eq!(files.tradeoff_points, 5 + 4);
    assert!(std::fs::read_to_string(files.report).unwrap().contains("proposed"));
}

#[test]
fn report_on_single_simulate_output() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &manifest(five_routers()));
    assert_eq!(run(&["simulate", "--manifest", &m, "--router", "round_robin", "--concurrency", "4"]), EXIT_OK);
    let out = tmp.path().join("out");
    assert!(out.join("trace_round_robin_c4.jsonl").exists());
    assert_eq!(run(&["report", "--manifest", &m]), EXIT_OK);
    let tradeoff = std::fs::read_to_string(out.join("tradeoff.tsv")).unwrap();
    assert_eq!(tradeoff.lines().count(), 2);
    assert!(!out.join("quality_matrix.tsv").exists());
}

#[test]
fn report_names_missing_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let err = cli::cmd_report(tmp.path(), tmp.path()).unwrap_err();
    assert_eq!(exit_code(&err), EXIT_USAGE);
    assert!(err.to_string().contains("summary.csv"), "{err}");

    std::fs::write(tmp.path().join("summary.csv"), "router,avg_quality,avg_response_time,avg_cost,overall\n").unwrap();
    let err = cli::cmd_report(tmp.path(), tmp.path()).unwrap_err();
    assert!(err.to_string().contains("quality_by_category.csv"), "{err}");
    assert_eq!(run(&["report", "--dir", "/nonexistent/results"]), EXIT_USAGE);
}

#[test]
fn flags_override_manifest_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), &manifest(five_routers()));
    let exp = Experiment::load(
        &m,
        &Overrides {
            seed: Some(99),
            concurrency: Some(8),
            output_dir: Some(tmp.path().join("elsewhere")),
            ..Overrides::default()
        },
    )
    .unwrap();
    assert_eq!(exp.seed, 99);
    assert_eq!(exp.manifest.evolution.seed, 99);
    assert_eq!(exp.concurrency_levels, [8]);
    assert_eq!(exp.output_dir, tmp.path().join("elsewhere"));
    let default = Experiment::load(&m, &Overrides::default()).unwrap();
    assert_eq!(default.output_dir, tmp.path().join("out"));
    // The inline workload pins its own seed, so token lengths ignore --seed.
    assert_eq!(default.requests, exp.requests);
}
