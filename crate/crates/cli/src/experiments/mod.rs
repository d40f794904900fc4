//! One module per CLI experiment; each returns its [`Artifacts`].

pub mod equivalence;
pub mod geometry;
pub mod hum;
pub mod stage1;
pub mod steer;

use crate::config::{Experiment, RunConfig};
use crate::error::CliError;
use crate::output::Artifacts;

pub fn run(experiment: Experiment, config: &RunConfig, seed: u64) -> Result<Artifacts, CliError> {
    match experiment {
        Experiment::VerifyGeometry => geometry::run(config, seed),
        Experiment::Stage1 => stage1::run(config, seed),
        Experiment::Equivalence => equivalence::run(config, seed),
        Experiment::Hum => hum::run(config, seed),
        Experiment::Steer => steer::run(config, seed),
    }
}
