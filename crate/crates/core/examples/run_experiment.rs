//! The full pipeline through the manifest API: compare every router of the
//! testbed manifest, sweep the proposed policy, then render the report.
//!
//! `cargo run --release --example run_experiment -- OUT_DIR`

use std::path::{Path, PathBuf};

use edgeroute::cli::{cmd_compare, cmd_report, cmd_simulate, Experiment, Overrides};

fn main() -> edgeroute::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("edgeroute-{}", std::process::id())));
    let manifests = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper-testbed");
    let overrides = Overrides {
        output_dir: Some(out.clone()),
        ..Overrides::default()
    };

    let compare = Experiment::load(manifests.join("manifest.json"), &Overrides { concurrency: Some(1), ..overrides.clone() })?;
    let table = cmd_compare(&compare)?;
    for s in &table.summaries {
        println!("{:<12} overall {:.4}", s.router_name, s.overall.unwrap());
    }

    let sweep = Experiment::load(manifests.join("manifest-fixed-policy.json"), &overrides)?;
    cmd_simulate(&sweep, "proposed")?;

    let files = cmd_report(&out, &out)?;
    println!("\n{}", std::fs::read_to_string(&files.report).unwrap_or_default());
    println!("results in {}", out.display());
    Ok(())
}
