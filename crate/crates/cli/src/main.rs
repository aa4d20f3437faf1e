//! `dirac2d <pipeline> --config <path> [--out <dir>]`

use clap::Parser;
use dirac2d_core::harness::{run_experiment, ExperimentConfig, Pipeline};
use dirac2d_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "dirac2d", version, about = "Experiments for the 2D massive Dirac operator")]
struct Cli {
    /// classify | free-decay | perturbed-decay | stone-check | dyadic-probe | selftest
    pipeline: String,
    /// Configuration file (key = value with [section] headers).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV, reports and the manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run(cli: &Cli) -> Result<Vec<String>, Error> {
    let pipeline: Pipeline = cli.pipeline.parse()?;
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None if pipeline == Pipeline::SelfTest => ExperimentConfig::parse("")?,
        None => return Err(Error::Usage(format!("pipeline {pipeline} needs --config"))),
    };
    let summary = run_experiment(&cfg, Some(pipeline), &cli.out)?;
    Ok(summary.notes)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(notes) => {
            for n in notes {
                println!("{n}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dirac2d: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
