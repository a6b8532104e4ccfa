//! Experiment runner for the `fockcx` command-line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod svg;

use std::path::PathBuf;

pub use config::{resolve, ExperimentConfig, ExperimentKind};
pub use error::{CliError, CliResult};

/// Files produced by a run, in write order.
pub fn run(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    use experiments::*;
    let out = match cfg.experiment {
        ExperimentKind::GroundSweep => ground::run_ground_sweep(cfg)?.output,
        ExperimentKind::ExcitedSweep => excited::run_excited_sweep(cfg)?.output,
        ExperimentKind::GenericBaseline => generic::run_generic_baseline(cfg)?.output,
        ExperimentKind::Distribution => distribution::run_distribution(cfg)?.output,
        ExperimentKind::ScalingFit => analyze::run_scaling_fit(cfg)?.output,
    };
    Ok(out.files)
}
