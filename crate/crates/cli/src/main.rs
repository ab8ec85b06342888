//! `groupwalk`: declarative experiment runner.
//!
//! Reads a JSON experiment config (group, weighted-word measure, options),
//! runs the requested pipeline stages, prints the JSON report to stdout and
//! optionally writes report/CSV/plot files to an output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 resource cap exceeded,
//! 1 any other failure.

use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand};
use groupwalk_core::pipeline::{emit, run, PipelineError, RunOptions, StageSet};
use groupwalk_core::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "groupwalk",
    version,
    about = "Random-walk convolution powers on finitely generated groups: spectral-radius comparison, ratio limits, cylinder equidistribution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report.json / CSV / plot-data files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed echoed into the report; sampling oracles derive from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for convolution (default: all cores). Results are
    /// identical for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Neither read nor write the convolution table cache.
    #[arg(long, global = true, default_value_t = false)]
    no_cache: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Validate the config and exit.
    Check,
    /// Bounded checks and the mgf minimization only (ξ, φ_min, centredness).
    Stone,
    /// Spectral-radius estimators and the comparison verdict.
    Spectral,
    /// Ratio-limit table for the configured test elements.
    Ratio,
    /// Cylinder equidistribution reports.
    Equidist,
    /// The full pipeline.
    All,
}

fn main() {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        // Ignore the error if a global pool exists already.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let Some(config_path) = cli.config.as_deref() else {
        eprintln!("error: --config <path> is required");
        exit(2);
    };
    let config = match ExperimentConfig::from_path(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            exit(2);
        }
    };

    if let Command::Check = cli.command {
        match config.validate() {
            Ok(v) => {
                println!(
                    "config ok: {} with {} atoms, n_max = {}",
                    v.descriptor.canonical_name(),
                    v.base_measure.support_size(),
                    v.n_max
                );
                return;
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit(2);
            }
        }
    }

    let stages = match cli.command {
        Command::Check => unreachable!(),
        Command::Stone => StageSet::none(),
        Command::Spectral => StageSet::only_spectral(),
        Command::Ratio => StageSet::only_ratio(),
        Command::Equidist => StageSet::only_equidist(),
        Command::All => StageSet::all(),
    };
    let opts = RunOptions {
        seed: cli.seed,
        use_cache: !cli.no_cache,
        stages,
    };

    let output = match run(&config, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code());
        }
    };

    let json = serde_json::to_string_pretty(&output.report).expect("report serializes");
    println!("{json}");

    if let Some(dir) = cli.out.as_deref() {
        match emit(&output, dir) {
            Ok(paths) => {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit(match e {
                    PipelineError::Io { .. } => 1,
                    other => other.exit_code(),
                });
            }
        }
    }
}
