//! Configuration, experiment orchestration and result export for the
//! `hourglass` command.
//!
//! Every output file carries the SHA-256 of the embedded config and the seed,
//! so a run can be reproduced byte for byte from its own output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

/// Caps the global thread pool at `HOURGLASS_THREADS` when it is set.
pub fn init_thread_pool() -> CliResult<()> {
    let Ok(v) = std::env::var("HOURGLASS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config("HOURGLASS_THREADS", format!("expected a positive integer, got {v:?}")))?;
    // A pool that already exists keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
