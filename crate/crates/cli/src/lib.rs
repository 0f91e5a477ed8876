//! Configuration, experiment drivers and output for the `sqzengine` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

pub use config::{Experiment, Overrides, RunConfig};
pub use error::CliError;

/// Runs a resolved config and writes its artifacts into the output
/// directory. Nothing is written when the config is rejected or the
/// physics fails before producing results.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let outcome = experiments::execute(cfg)?;
    let written = output::write_all(&cfg.output.dir, &outcome.artifacts)?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(written),
    }
}
