use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shadowtomo::experiments::{
    cmd_estimate, cmd_fit_scaling, cmd_norm, cmd_sample, cmd_scan, cmd_solve_r, ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "shadowtomo",
    version,
    about = "Classical shadow tomography with shallow brick-wall Clifford circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (key = value, version = 1).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the randomized-measurement protocol and store snapshots.
    Sample(Common),
    /// Solve the reconstruction coefficients for the configured depth.
    SolveR(Common),
    /// Estimate observables from snapshots and an r-file.
    Estimate(Common),
    /// Shadow norms of the configured observables.
    Norm(Common),
    /// Optimal-depth scan over operator weights.
    Scan(Common),
    /// Fit the fidelity-variance scaling form.
    FitScaling(Common),
}

type RunFn = fn(&ExperimentConfig, &std::path::Path) -> shadowtomo::Result<Vec<PathBuf>>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (run, common): (RunFn, Common) = match cli.command {
        Command::Sample(c) => (cmd_sample, c),
        Command::SolveR(c) => (cmd_solve_r, c),
        Command::Estimate(c) => (cmd_estimate, c),
        Command::Norm(c) => (cmd_norm, c),
        Command::Scan(c) => (cmd_scan, c),
        Command::FitScaling(c) => (cmd_fit_scaling, c),
    };
    let result = ExperimentConfig::load(&common.config).and_then(|cfg| {
        std::fs::create_dir_all(&common.out)?;
        run(&cfg, &common.out)
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error kind={} message={:?}", e.kind(), e.to_string());
            ExitCode::FAILURE
        }
    }
}
