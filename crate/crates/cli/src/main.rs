use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use magsteer_cli::{run_experiment, Experiment};

/// Numerical lab for magnetically steered harmonic map heat flow on the sphere.
#[derive(Debug, Parser)]
#[command(name = "magsteer", version)]
struct Args {
    /// verify-geometry | stage1 | equivalence | hum | steer
    experiment: String,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let result = args.experiment.parse::<Experiment>().and_then(|exp| {
        let text = std::fs::read_to_string(&args.config)
            .map_err(|e| magsteer_cli::CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
        run_experiment(exp, &text, args.seed, args.out.as_deref())
    });
    match result {
        Ok(outcome) => {
            for c in &outcome.artifacts.checks {
                let status = if c.passed { "pass" } else { "FAIL" };
                println!("{status:4} {:<40} {:>14.6e}  limit {:.6e}", c.name, c.value, c.limit);
            }
            println!("outputs in {}", outcome.out_dir.display());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
