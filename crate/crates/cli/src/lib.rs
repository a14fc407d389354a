//! Library behind the `kpp-lab` binary: configuration, commands and output.
//!
//! Every command is a pure function from a [`LoadedConfig`] to an [`Outcome`]
//! holding the summary and the bytes of each output file, so runs can be
//! compared for byte identity without touching the disk.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use anyhow::Result;

pub use commands::{execute, exit_code, run_sweep, PointResult, RunOptions};
pub use config::{CommandName, ConfigError, ExperimentConfig, LoadedConfig};
pub use output::{Cell, Outcome, Summary};

/// Loads `config`, runs `cmd` and writes the outputs. The directory is `out`
/// if given, else the config's `out`, else `kpp-out/<command>`.
pub fn run_to_dir(
    cmd: CommandName,
    config: &Path,
    out: Option<&Path>,
    opts: &RunOptions,
) -> Result<(Outcome, PathBuf)> {
    let loaded = LoadedConfig::from_path(config)?;
    let outcome = execute(cmd, &loaded, opts)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| loaded.config.out.clone())
        .unwrap_or_else(|| PathBuf::from("kpp-out").join(cmd.as_str()));
    outcome.write(&dir)?;
    Ok((outcome, dir))
}
