//! `spikelab` — run a study from a flat key-value configuration.
//!
//! Every invocation writes into `<out>/<subcommand>-<hash>` where `<hash>`
//! is a content hash of the resolved configuration, echoes that
//! configuration as `config.resolved`, and exits with 0 on success, 2 on a
//! configuration error and 3 on a numerical failure.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "spikelab", version, about = "Peaked solutions of singularly perturbed KGM(P) systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Configuration file (`key = value` lines).
    config: PathBuf,
    /// Parent directory of the run directory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Worker threads for ε sweeps (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Radial ground state: profile CSV and summary JSON.
    GroundState(RunArgs),
    /// Constants C and α as JSON.
    Constants(RunArgs),
    /// Randomized box-bound check of ψ.
    PsiCheck(RunArgs),
    /// Fixed-point reduction at ξ for every ε: traces, dumps, residuals.
    Reduce(RunArgs),
    /// Reduced functional over the ε sweep and the expansion fit.
    Expansion(RunArgs),
    /// Peak search for every ε.
    PeakScan(RunArgs),
    /// Scaling suite report.
    Diagnostics(RunArgs),
    /// Half-space limit comparison with γ.
    Gamma(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::GroundState(a) => ("ground-state", a),
        Command::Constants(a) => ("constants", a),
        Command::PsiCheck(a) => ("psi-check", a),
        Command::Reduce(a) => ("reduce", a),
        Command::Expansion(a) => ("expansion", a),
        Command::PeakScan(a) => ("peak-scan", a),
        Command::Diagnostics(a) => ("diagnostics", a),
        Command::Gamma(a) => ("gamma", a),
    };
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    match run::run(name, &args.config, &args.out, jobs) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error [{name}]: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
