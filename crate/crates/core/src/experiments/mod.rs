//! Runnable numerical experiments (double precision only).
//!
//! Sample-level work runs on a rayon pool whose size is capped by the
//! `TALENTI_LAB_THREADS` environment variable; results are collected in sample
//! order, so outputs do not depend on the thread count.

pub mod counterexample;
pub mod cutoff;
pub mod inequalities;
pub mod random;
pub mod steps;
pub mod sweep;
pub mod talenti;

pub use counterexample::{run_counterexample, run_counterexample_full, CounterexampleReport, CounterexampleRun, ExperimentConfig};
pub use cutoff::CutoffSpec;
pub use random::{random_bang_bang, random_block_control, smooth_dirichlet_field, Rng};
pub use steps::{step_approximation, StepApproximation};
pub use sweep::{adversarial_set, blend, maximality_sweep, run_sweep, Adversary, SweepFailure, SweepReport};
pub use talenti::{run_talenti, talenti_sample, talenti_tolerance, verify_talenti, TalentiCheck, TalentiReport};

use crate::error::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "TALENTI_LAB_THREADS";

/// Runs `job` on a pool sized by [`THREADS_ENV`] (rayon's default when unset).
pub fn with_thread_cap<R: Send>(job: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}
