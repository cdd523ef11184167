use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ergodisc::commands::{exit_code_for, EXIT_OK};
use ergodisc::{execute, Experiment, ExperimentConfig, Overrides};

/// Discretized torus maps: invariant measures, rasters and rates of injectivity.
#[derive(Parser)]
#[command(name = "ergodisc", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Measures carried by the cycles reached from given starting points.
    MeasureOrbit(Flags),
    /// Cycle structure and invariant measure of the whole grid.
    MeasureGlobal(Flags),
    /// Rate of injectivity by lattice-point counting.
    LinearRate(Flags),
    /// Mean rate of injectivity by Monte Carlo.
    LinearMeanrate(Flags),
    /// Preimages of a point under the composed discretizations.
    LinearPreimage(Flags),
    /// Rates of random sequences as a function of their length.
    LinearDecay(Flags),
    /// Re-render a stored measure CSV.
    Render(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    budget_bytes: Option<u64>,
    #[arg(long)]
    budget_steps: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match cli.verb {
        Verb::MeasureOrbit(f) => (Experiment::MeasureOrbit, f),
        Verb::MeasureGlobal(f) => (Experiment::MeasureGlobal, f),
        Verb::LinearRate(f) => (Experiment::LinearRate, f),
        Verb::LinearMeanrate(f) => (Experiment::LinearMeanrate, f),
        Verb::LinearPreimage(f) => (Experiment::LinearPreimage, f),
        Verb::LinearDecay(f) => (Experiment::LinearDecay, f),
        Verb::Render(f) => (Experiment::Render, f),
    };
    let code = match run(experiment, flags) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ergodisc: {e}");
            exit_code_for(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn run(experiment: Experiment, flags: Flags) -> ergodisc::Result<i32> {
    let mut config = match &flags.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.apply(&Overrides {
        out: flags.out,
        seed: flags.seed,
        workers: flags.workers,
        budget_bytes: flags.budget_bytes,
        budget_steps: flags.budget_steps,
    });
    let report = execute(&config, experiment)?;
    for f in &report.failures {
        eprintln!("ergodisc: {} failed: {}", f.run, f.message);
    }
    let code = report.exit_code();
    if code == EXIT_OK {
        eprintln!("ergodisc: wrote {} files", report.files.len());
    } else {
        eprintln!("ergodisc: wrote {} files, {} sub-runs failed", report.files.len(), report.failures.len());
    }
    Ok(code)
}
