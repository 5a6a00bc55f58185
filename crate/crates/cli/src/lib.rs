//! Batch front end for APS-controlled IV estimation: CSV ingestion, rule
//! configuration, bandwidth sweeps, Monte Carlo runs and report files.

pub mod config;
pub mod error;
pub mod ingest;
pub mod run;

pub use config::{Format, RunConfig, Source};
pub use error::{CliError, Result};
pub use ingest::{emit_csv, ingest_csv, Schema};
pub use run::run;

/// Environment variable that caps worker threads; 0 or unset means automatic.
pub const THREADS_ENV: &str = "APS_IV_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`].
pub fn configure_threads() -> Result<()> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))
}
