//! Command-line front end of the `magsteer` lab.
//!
//! ```text
//! magsteer <experiment> --config <file.toml> [--seed N] [--out DIR]
//! ```
//!
//! Experiments: `verify-geometry`, `stage1`, `equivalence`, `hum`, `steer`.
//! The config schema is documented in [`config`], the output layout in
//! [`output`]. The `report.csv` columns are
//! [`magsteer_core::monitors::CSV_COLUMNS`].
//!
//! Exit status: 0 when every check passes, 1 when a monitor or acceptance
//! check fails, 2 on config or solver errors. Config errors are detected
//! before any output file is created.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::{Experiment, RunConfig};
pub use error::CliError;
pub use output::{Artifacts, RunContext};

/// A finished run.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Artifacts,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Parses and validates `config_text`, runs `experiment` and writes its
/// artifacts. `seed` and `out` override the config values.
pub fn run_experiment(
    experiment: Experiment,
    config_text: &str,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<RunOutcome, CliError> {
    let config = RunConfig::parse(config_text)?;
    config.validate(experiment)?;
    let seed = seed.or(config.seed).unwrap_or(0);
    let out_dir = out.map_or_else(|| config.output.dir.clone(), Path::to_path_buf);
    log::info!("running {} with seed {seed}", experiment.name());
    let artifacts = experiments::run(experiment, &config, seed)?;
    let ctx = RunContext::new(experiment.name(), config_text, seed);
    let files = artifacts.write(&out_dir, &ctx)?;
    for c in artifacts.checks.iter().filter(|c| !c.passed) {
        log::warn!("check {} failed: {:.6e} vs limit {:.6e}", c.name, c.value, c.limit);
    }
    Ok(RunOutcome {
        exit_code: if artifacts.passed() { 0 } else { 1 },
        artifacts,
        out_dir,
        files,
    })
}
