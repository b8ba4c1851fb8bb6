//! Config-driven Monte Carlo experiments and their reports.

mod config;
mod experiments;
mod report;
pub mod stats;

pub use config::{EpsilonSchedule, EstimatorSpec, ExperimentConfig, GammaMode, GammaSource, OutputSpec};
pub use experiments::{run_clt_experiment, run_smoothed_experiment, run_uv_equivalence, run_weighted_process_experiment, CltRun};
pub use report::{
    csv, stream, to_json, write_file, CltSummary, ExperimentReport, Provenance, Row, UvReport, UvSummary, WepReport, WepSummary,
    STREAM_RULE,
};

use crate::error::{Error, Result};

/// Environment variable that sets the number of worker threads.
pub const WORKERS_ENV: &str = "UVSTAT_WORKERS";

/// Sizes the global thread pool from `UVSTAT_WORKERS` when it is set.
/// Results never depend on the worker count.
pub fn init_workers_from_env() -> Result<Option<usize>> {
    let Ok(v) = std::env::var(WORKERS_ENV) else { return Ok(None) };
    let n: usize = v.trim().parse().map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(Error::Config(format!("{WORKERS_ENV} must be positive")));
    }
    // a pool that is already built keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}
