use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::manifest::{Experiment, RouterSpec};
use super::optimize::{optimize_assignment, optimize_thresholds, GenomeKind};
use crate::domain::RequestCategory;
use crate::error::{Error, Result};
use crate::metrics::{fmt_f64, overall_scores, summaries_from_csv, summaries_to_csv, ObjectiveVector, RouterSummary};
use crate::moo::GenerationStats;
use crate::sim::{run_simulation, trace_to_jsonl, SimConfig, SimOutcome};
use crate::SCHEMA_VERSION;

pub const SWEEP_CSV_HEADER: &str = "concurrency,avg_quality,avg_response_time,avg_cost";

/// Writes a new file, refusing to replace an existing one.
pub fn write_new(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut file = OpenOptions::new().write(true).create_new(true).open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            Error::Config(format!("{} already exists; outputs are never overwritten", path.display()))
        } else {
            Error::io(path, e)
        }
    })?;
    file.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn simulate_with(experiment: &Experiment, spec: &RouterSpec, concurrency: u32) -> Result<SimOutcome> {
    let config = SimConfig {
        concurrency,
        seed: experiment.seed,
        open_loop: experiment.open_loop(),
    };
    let mut router = spec.instantiate(&experiment.topology, experiment.seed)?;
    run_simulation(&config, &experiment.topology, &experiment.requests, router.as_mut())
}

#[derive(Serialize)]
struct ParetoFile<G> {
    schema_version: u32,
    genome: GenomeKind,
    selected: usize,
    reference: ObjectiveVector,
    solutions: Vec<ParetoSolution<G>>,
}

#[derive(Serialize)]
struct ParetoSolution<G> {
    genome: G,
    objectives: ObjectiveVector,
}

/// Runs NSGA-II and writes `pareto.json`, `evolution.log` and the selected
/// policy (`policy.json` for thresholds, `assignment.json` otherwise).
/// Returns the generation log.
pub fn cmd_optimize(experiment: &Experiment, mut on_line: impl FnMut(&str)) -> Result<Vec<String>> {
    let settings = experiment.optimize_settings();
    let out = &experiment.output_dir;
    let mut log = Vec::new();
    let mut record = |s: &GenerationStats| {
        let line = s.to_string();
        on_line(&line);
        log.push(line);
    };
    let genome = experiment.manifest.optimize.genome;
    let (pareto, policy_file, policy) = match genome {
        GenomeKind::Threshold => {
            let r = optimize_thresholds(&experiment.topology, &experiment.requests, &settings, &mut record)?;
            let doc = r.policy(&settings);
            (pareto_json(genome, &r.result, r.selected), "policy.json", doc.to_json())
        }
        GenomeKind::Assignment => {
            let r = optimize_assignment(&experiment.topology, &experiment.requests, &settings, &mut record)?;
            let doc = AssignmentDocument {
                schema_version: SCHEMA_VERSION,
                assignments: r
                    .selected_genome()
                    .assignments
                    .iter()
                    .map(|&p| {
                        let (node, model) = experiment.topology.describe(p);
                        [node.to_string(), model.to_string()]
                    })
                    .collect(),
                objectives: r.selected_objectives(),
            };
            (pareto_json(genome, &r.result, r.selected), "assignment.json", to_json(&doc))
        }
    };
    write_new(&out.join("pareto.json"), &pareto)?;
    write_new(&out.join(policy_file), &policy)?;
    let mut text = log.join("\n");
    text.push('\n');
    write_new(&out.join("evolution.log"), &text)?;
    Ok(log)
}

#[derive(Serialize)]
struct AssignmentDocument {
    schema_version: u32,
    /// `[node_id, model_id]` per request id.
    assignments: Vec<[String; 2]>,
    objectives: ObjectiveVector,
}

fn pareto_json<G: Clone + Serialize>(kind: GenomeKind, r: &crate::moo::EvolutionResult<G>, selected: usize) -> String {
    to_json(&ParetoFile {
        schema_version: SCHEMA_VERSION,
        genome: kind,
        selected,
        reference: r.reference,
        solutions: r
            .pareto
            .iter()
            .map(|e| ParetoSolution {
                genome: e.genome.clone(),
                objectives: e.objectives,
            })
            .collect(),
    })
}

/// Simulates one router at every configured concurrency level. Writes
/// `trace_{router}_c{L}.jsonl` and `summary_{router}_c{L}.csv` per level, the
/// `sweep_{router}.csv` series, and `policy_{router}.json` when the policy was
/// optimized on the fly.
pub fn cmd_simulate(experiment: &Experiment, router: &str) -> Result<Vec<(u32, RouterSummary)>> {
    let spec = experiment.resolve_router(router)?;
    let out = &experiment.output_dir;
    let mut rows = Vec::new();
    for &level in &experiment.concurrency_levels {
        let outcome = simulate_with(experiment, &spec, level)?;
        write_new(&out.join(format!("trace_{router}_c{level}.jsonl")), &trace_to_jsonl(&outcome.trace))?;
        write_new(
            &out.join(format!("summary_{router}_c{level}.csv")),
            &summaries_to_csv(std::slice::from_ref(&outcome.summary)),
        )?;
        rows.push((level, outcome.summary));
    }
    let mut sweep = format!("{SWEEP_CSV_HEADER}\n");
    for (level, s) in &rows {
        sweep.push_str(&format!(
            "{level},{},{},{}\n",
            fmt_f64(s.avg_quality),
            fmt_f64(s.avg_response_time),
            fmt_f64(s.avg_cost)
        ));
    }
    write_new(&out.join(format!("sweep_{router}.csv")), &sweep)?;
    write_optimized_policy(out, &spec)?;
    Ok(rows)
}

fn write_optimized_policy(out: &Path, spec: &RouterSpec) -> Result<()> {
    if let RouterSpec::Policy {
        name,
        document,
        optimized: true,
    } = spec
    {
        // compare and simulate both persist the policy they optimized; the same
        // manifest and seed reproduce it, so an identical file is accepted.
        let path = out.join(format!("policy_{name}.json"));
        let text = document.to_json();
        if std::fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
            write_new(&path, &text)?;
        }
    }
    Ok(())
}

/// Result of [`cmd_compare`].
#[derive(Debug, Clone)]
pub struct Comparison {
    pub concurrency: u32,
    /// Rows in manifest order with `overall` filled.
    pub summaries: Vec<RouterSummary>,
    pub quality_by_category: Vec<(String, BTreeMap<RequestCategory, f64>)>,
}

pub const QUALITY_CSV_HEADER: &str = "router,code,math,reading,commonsense";

/// Runs every router on the same workload at the first concurrency level and
/// writes `summary.csv`, `quality_by_category.csv`, `trace_{router}.jsonl` and
/// the policies optimized on the fly.
pub fn cmd_compare(experiment: &Experiment) -> Result<Comparison> {
    let names = experiment.router_names();
    if names.len() < 2 {
        return Err(Error::validation("routers", "compare needs at least two routers"));
    }
    let concurrency = experiment.concurrency_levels[0];
    let out = &experiment.output_dir;
    let mut summaries = Vec::new();
    let mut quality = Vec::new();
    let mut traces = Vec::new();
    let mut specs = Vec::new();
    for name in names {
        let spec = experiment.resolve_router(name)?;
        let outcome = simulate_with(experiment, &spec, concurrency)?;
        summaries.push(outcome.summary);
        quality.push((name.to_string(), outcome.quality_by_category));
        traces.push((name, trace_to_jsonl(&outcome.trace)));
        specs.push(spec);
    }
    let summaries = overall_scores(&summaries)?;
    write_new(&out.join("summary.csv"), &summaries_to_csv(&summaries))?;
    let mut q = format!("{QUALITY_CSV_HEADER}\n");
    for (name, by_cat) in &quality {
        q.push_str(name);
        for c in RequestCategory::DATASET {
            q.push(',');
            if let Some(v) = by_cat.get(&c) {
                q.push_str(&fmt_f64(*v));
            }
        }
        q.push('\n');
    }
    write_new(&out.join("quality_by_category.csv"), &q)?;
    for (name, text) in traces {
        write_new(&out.join(format!("trace_{name}.jsonl")), &text)?;
    }
    for spec in &specs {
        write_optimized_policy(out, spec)?;
    }
    Ok(Comparison {
        concurrency,
        summaries,
        quality_by_category: quality,
    })
}

/// Files written by [`cmd_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub report: PathBuf,
    pub tradeoff: PathBuf,
    pub quality_matrix: Option<PathBuf>,
    pub concurrency_series: Option<PathBuf>,
    pub tradeoff_points: usize,
    pub series_rows: usize,
}

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::validation("report input", format!("missing {}", path.display()))
        } else {
            Error::io(path, e)
        }
    })
}

/// Names in `dir` matching `{prefix}*{suffix}`, sorted.
fn matching(dir: &Path, prefix: &str, suffix: &str) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some(name) = entry.file_name().to_str() {
            if name.starts_with(prefix) && name.ends_with(suffix) && name.len() > prefix.len() + suffix.len() {
                names.push(name.to_string());
            }
        }
    }
    // Numeric order for the `_c{level}` suffix, so c10 sorts after c8.
    names.sort_by_cached_key(|n| {
        let stem = &n[..n.len() - suffix.len()];
        let digits = stem.len() - stem.bytes().rev().take_while(u8::is_ascii_digit).count();
        (stem[..digits].to_string(), stem[digits..].parse::<u64>().unwrap_or(0), n.clone())
    });
    Ok(names)
}

/// Renders compare and simulate outputs in `input` as plot-ready
/// tab-separated files plus `report.txt`, all written to `out`.
pub fn cmd_report(input: &Path, out: &Path) -> Result<ReportFiles> {
    if !input.is_dir() {
        return Err(Error::validation("report input", format!("missing {}", input.display())));
    }
    let compare = input.join("summary.csv");
    let simulated = matching(input, "summary_", ".csv")?;
    let mut points: Vec<(String, RouterSummary)> = Vec::new();
    let mut quality_rows: Option<String> = None;
    if compare.exists() {
        for s in summaries_from_csv(&read_input(&compare)?)? {
            points.push(("summary.csv".into(), s));
        }
        let q = read_input(&input.join("quality_by_category.csv"))?;
        let mut lines = q.lines();
        if lines.next() != Some(QUALITY_CSV_HEADER) {
            return Err(Error::schema("quality_by_category.csv header", format!("expected `{QUALITY_CSV_HEADER}`")));
        }
        let mut tsv = QUALITY_CSV_HEADER.replace(',', "\t");
        tsv.push('\n');
        for line in lines.filter(|l| !l.is_empty()) {
            tsv.push_str(&line.replace(',', "\t"));
            tsv.push('\n');
        }
        quality_rows = Some(tsv);
    }
    for name in &simulated {
        for s in summaries_from_csv(&read_input(&input.join(name))?)? {
            points.push((name.clone(), s));
        }
    }
    if points.is_empty() {
        return Err(Error::validation(
            "report input",
            format!("missing {} (or summary_<router>_c<level>.csv)", compare.display()),
        ));
    }

    let mut series = Vec::new();
    for name in matching(input, "sweep_", ".csv")? {
        let router = &name["sweep_".len()..name.len() - ".csv".len()];
        let text = read_input(&input.join(&name))?;
        let mut lines = text.lines();
        if lines.next() != Some(SWEEP_CSV_HEADER) {
            return Err(Error::schema(format!("{name} header"), format!("expected `{SWEEP_CSV_HEADER}`")));
        }
        for line in lines.filter(|l| !l.is_empty()) {
            series.push(format!("{router}\t{}", line.replace(',', "\t")));
        }
    }

    let mut tradeoff = String::from("router\tsource\tavg_quality\tavg_response_time\tavg_cost\n");
    for (source, s) in &points {
        tradeoff.push_str(&format!(
            "{}\t{source}\t{}\t{}\t{}\n",
            s.router_name,
            fmt_f64(s.avg_quality),
            fmt_f64(s.avg_response_time),
            fmt_f64(s.avg_cost)
        ));
    }

    let mut report = String::from("routing experiment report\n\n");
    report.push_str(&format!(
        "{:<16} {:<28} {:>10} {:>10} {:>12} {:>8}\n",
        "router", "source", "quality", "rt_s", "cost", "overall"
    ));
    for (source, s) in &points {
        report.push_str(&format!(
            "{:<16} {:<28} {:>10.4} {:>10.4} {:>12.4e} {:>8}\n",
            s.router_name,
            source,
            s.avg_quality,
            s.avg_response_time,
            s.avg_cost,
            s.overall.map(|o| format!("{o:.4}")).unwrap_or_else(|| "-".into())
        ));
    }
    if let Some(q) = &quality_rows {
        report.push_str("\nmean quality by category\n");
        for line in q.lines() {
            let cells: Vec<String> = line
                .split('\t')
                .enumerate()
                .map(|(i, c)| match (i, c.parse::<f64>()) {
                    (0, _) => format!("{c:<16}"),
                    (_, Ok(v)) => format!("{v:>12.4}"),
                    _ => format!("{c:>12}"),
                })
                .collect();
            report.push_str(cells.join(" ").trim_end());
            report.push('\n');
        }
    }
    if !series.is_empty() {
        report.push_str("\nconcurrency sweep\n");
        report.push_str(&format!("{:<16} {:>6} {:>10} {:>10} {:>12}\n", "router", "c", "quality", "rt_s", "cost"));
        for row in &series {
            let f: Vec<&str> = row.split('\t').collect();
            let num = |i: usize| f[i].parse::<f64>().unwrap_or(f64::NAN);
            report.push_str(&format!(
                "{:<16} {:>6} {:>10.4} {:>10.4} {:>12.4e}\n",
                f[0],
                f[1],
                num(2),
                num(3),
                num(4)
            ));
        }
    }

    let files = ReportFiles {
        report: out.join("report.txt"),
        tradeoff: out.join("tradeoff.tsv"),
        quality_matrix: quality_rows.as_ref().map(|_| out.join("quality_matrix.tsv")),
        concurrency_series: (!series.is_empty()).then(|| out.join("concurrency_series.tsv")),
        tradeoff_points: points.len(),
        series_rows: series.len(),
    };
    write_new(&files.tradeoff, &tradeoff)?;
    if let (Some(path), Some(q)) = (&files.quality_matrix, &quality_rows) {
        write_new(path, q)?;
    }
    if let Some(path) = &files.concurrency_series {
        let mut text = String::from("router\tconcurrency\tavg_quality\tavg_response_time\tavg_cost\n");
        for row in &series {
            text.push_str(row);
            text.push('\n');
        }
        write_new(path, &text)?;
    }
    write_new(&files.report, &report)?;
    Ok(files)
}
