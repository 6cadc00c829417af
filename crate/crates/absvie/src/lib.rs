//! Experiment runner for `absvie-core`.
//!
//! Reads a TOML experiment config, runs one of the modes `solve`,
//! `convergence`, `compare` or `norms`, and writes a CSV with a fixed header.
//! Output is a pure function of the config and seed.

pub mod config;
pub mod error;
pub mod experiment;
pub mod table;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, Mode};
pub use error::{Result, RunError};
pub use table::Table;

/// Replaces the Monte Carlo seed, and the seed list of `compare`.
pub fn override_seed(cfg: &mut ExperimentConfig, seed: u64) {
    cfg.monte_carlo.seed = seed;
    if let Some(c) = cfg.compare.as_mut() {
        c.seeds = vec![seed];
    }
}

/// Runs `mode` on a loaded config and writes its CSV into `out_dir`.
///
/// On failure any file at the output path is removed.
pub fn run(mode: Mode, cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    cfg.validate(mode)?;
    let file = cfg.output_file(mode);
    if file.is_empty() || file.contains(['/', '\\']) {
        return Err(RunError::ConfigParse(format!(
            "output.file: `{file}` is not a plain file name"
        )));
    }
    let result = experiment::run_table(mode, cfg).and_then(|t| t.write(out_dir, &file));
    if result.is_err() {
        let _ = std::fs::remove_file(out_dir.join(&file));
    }
    result
}

/// Loads `config`, applies the seed override and runs `mode`.
pub fn run_file(mode: Mode, config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<PathBuf> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        override_seed(&mut cfg, seed);
    }
    run(mode, &cfg, out_dir)
}
