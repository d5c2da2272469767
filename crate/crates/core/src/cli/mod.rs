//! Experiment driver: optimization, simulation, comparison and reports.
//!
//! One [`ExperimentManifest`] drives every command; flags override its fields.
//! Outputs are write-once, so rerunning into the same directory fails rather
//! than clobbering earlier results.

mod commands;
mod manifest;
mod optimize;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_compare, cmd_optimize, cmd_report, cmd_simulate, simulate_with, write_new, Comparison, ReportFiles,
    QUALITY_CSV_HEADER, SWEEP_CSV_HEADER,
};
pub use manifest::{Experiment, ExperimentManifest, OptimizeSection, Overrides, RouterEntry, RouterSpec, WorkloadSource};
pub use optimize::{
    evaluate_assignment, evaluate_thresholds, optimize_assignment, optimize_thresholds, GenomeKind,
    OptimizeSettings, Optimized,
};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "edgeroute", version, about = "Multi-objective LLM request routing on a simulated cloud-edge testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Overrides the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the manifest output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single concurrency level to run instead of the manifest's list
    /// (for `optimize`, the window candidates are evaluated with).
    #[arg(long)]
    concurrency: Option<u32>,
    /// Evaluate each generation in parallel.
    #[arg(long)]
    parallel: Option<bool>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve routing policies and write the Pareto set and selected policy.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_genome)]
        genome: Option<GenomeKind>,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
    },
    /// Simulate one router at each concurrency level.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        router: String,
    },
    /// Run every manifest router on the same workload and score them.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Turn a result directory into plot-ready tables.
    Report {
        /// Result directory; defaults to the manifest's output directory.
        #[arg(long, required_unless_present = "manifest")]
        dir: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Where to write the report; defaults to the result directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_genome(s: &str) -> Result<GenomeKind, String> {
    match s {
        "threshold" => Ok(GenomeKind::Threshold),
        "assignment" => Ok(GenomeKind::Assignment),
        _ => Err(format!("unknown genome `{s}`; known: threshold, assignment")),
    }
}

/// Exit code for an error.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Validation { .. } | Error::Schema { .. } | Error::Config(_) | Error::Parse { .. } => EXIT_USAGE,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

impl Common {
    fn overrides(&self, optimizing: bool) -> Overrides {
        Overrides {
            seed: self.seed,
            output_dir: self.out.clone(),
            concurrency: if optimizing { None } else { self.concurrency },
            optimize_concurrency: if optimizing { self.concurrency } else { None },
            parallel: self.parallel,
            ..Overrides::default()
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command) -> crate::Result<()> {
    match command {
        Command::Optimize {
            common,
            genome,
            population,
            generations,
        } => {
            let mut overrides = common.overrides(true);
            overrides.population_size = population;
            overrides.generations = generations;
            let mut experiment = Experiment::load(&common.manifest, &overrides)?;
            if let Some(g) = genome {
                experiment.manifest.optimize.genome = g;
            }
            cmd_optimize(&experiment, |line| println!("{line}"))?;
            println!("wrote {}", experiment.output_dir.display());
        }
        Command::Simulate { common, router } => {
            let experiment = Experiment::load(&common.manifest, &common.overrides(false))?;
            for (level, s) in cmd_simulate(&experiment, &router)? {
                println!(
                    "{} c={level} quality={:.4} rt={:.4}s cost={:.4e}",
                    s.router_name, s.avg_quality, s.avg_response_time, s.avg_cost
                );
            }
        }
        Command::Compare { common } => {
            let experiment = Experiment::load(&common.manifest, &common.overrides(false))?;
            let c = cmd_compare(&experiment)?;
            print!("{}", crate::metrics::summaries_to_csv(&c.summaries));
        }
        Command::Report { dir, manifest, out } => {
            let input = match (dir, manifest) {
                (Some(d), _) => d,
                (None, Some(m)) => {
                    let base = m.parent().map(PathBuf::from).unwrap_or_default();
                    base.join(ExperimentManifest::read(&m)?.output_dir)
                }
                (None, None) => unreachable!("clap requires one of --dir and --manifest"),
            };
            let out = out.unwrap_or_else(|| input.clone());
            let files = cmd_report(&input, &out)?;
            print!("{}", std::fs::read_to_string(&files.report).map_err(|e| Error::io(&files.report, e))?);
        }
    }
    Ok(())
}
