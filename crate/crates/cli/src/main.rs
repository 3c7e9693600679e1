//! `rtwave` — numerical laboratory for two layers of compressible barotropic
//! viscous fluid with free surfaces: equilibria, per-mode linear stability,
//! neutral surface tension, nonlinear time stepping with energy tracking,
//! decay fitting, functional-inequality verification, and the vanishing
//! surface-tension limit.

mod config;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "rtwave",
    version,
    about = "Two-layer compressible free-boundary flow laboratory"
)]
struct Cli {
    /// Scenario: equilibrium | stability-map | neutral-sigma | simulate |
    /// decay-fit | verify-inequalities | sigma-limit
    scenario: String,
    /// Configuration file: flat `section.key = value` text or JSON
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Random seed; overrides the config's `seed` key
    #[arg(long)]
    seed: Option<u64>,
    /// Rayon worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow::anyhow!("thread pool setup failed: {e}"))?;
    }
    let cfg = config::Config::load(&cli.config)?;
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.u64_or("seed", 0)?,
    };
    let artifacts = scenarios::run_scenario(&cli.scenario, &cfg, seed)?;
    artifacts.write_all(&cli.out, &cli.scenario, &cfg.raw, seed)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
