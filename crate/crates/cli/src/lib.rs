//! Command-line front end for `fvdsim-core`.
//!
//! [`run`] takes parsed arguments through config layering, resolution,
//! execution on a sized thread pool and output, and returns the exit status.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use serde_json::json;

pub use args::Cli;
use commands::Job;
use config::RunConfig;
use output::{inputs_hash, OutputDir, META_FILE};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0} exists; pass --force to overwrite")]
    Exists(PathBuf),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Exists(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<fvdsim_core::Error> for CliError {
    fn from(e: fvdsim_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

/// Exit status of a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Outputs were written but some points or fits failed.
    Partial,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Partial => 4,
        }
    }
}

/// File config overlaid with flags and `FVDSIM_*` variables.
pub fn layered_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let common = cli.command.common();
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.overlay(&cli.command.overlay());
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Status, CliError> {
    let command = cli.command.name();
    let cfg = layered_config(cli)?;
    cfg.check_kind(command)?;
    let threads = cfg.threads()?;
    let job = Job::resolve(command, &cfg)?;
    let out_root = config::require(cfg.io.out.clone(), "io.out")?;

    let mut out = OutputDir::prepare(&out_root, job.outputs(), cfg.io.force.unwrap_or(false))?;
    // io and threads do not change results and stay out of the hash
    let hash = inputs_hash(&json!({ "command": command, "job": &job }));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("compute.threads: {e}")))?;
    log::info!("{command}: {threads} threads, inputs {hash}");
    let summary = pool.install(|| job.execute(&hash, threads, &mut out))?;

    let status = if summary.partial { Status::Partial } else { Status::Ok };
    let meta = json!({
        "fvdsim_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg,
        "resolved": job,
        "threads": threads,
        "inputs_hash": hash,
        "outputs": out.written(),
        "status": match status { Status::Ok => "ok", Status::Partial => "partial" },
        "results": summary.results,
    });
    out.write_json(META_FILE, &meta)?;
    Ok(status)
}
