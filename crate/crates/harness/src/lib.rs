//! Configuration, simulation study, verification campaigns and file output
//! behind the `cpi` command-line tool.

pub mod config;
pub mod error;
pub mod fitpredict;
pub mod output;
pub mod study;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use study::{run_section5, StudyResult};
pub use verify::{verify_bounds, verify_prop21};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "CPI_THREADS";

/// Runs `f` on a dedicated rayon pool with `threads` workers (all cores when
/// `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> std::result::Result<R, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
