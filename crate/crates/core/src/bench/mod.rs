//! Benchmark plumbing: run descriptions, result records, Dolan–Moré
//! performance profiles, CSV files and config-driven sweeps.

mod csvio;
mod profile;
mod runs;
mod sweep;
pub mod verify;

pub use csvio::{read_bench, read_profile, write_bench, write_profile, write_trace, TRACE_HEADER};
pub use profile::{check_curve, performance_profile, Metric, Profile, ProfileCurve};
pub use runs::{DataSource, ProblemSpec, RunSpec};
pub use sweep::{parse_sweep_config, run_sweep};

use crate::solvers::{RunResult, RunStatus};

/// One (problem, solver) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub problem: String,
    pub solver: String,
    pub status: RunStatus,
    pub iters: usize,
    pub fevals: usize,
    pub wall_time_s: f64,
    pub f_final: f64,
    pub gnorm_final: f64,
}

impl BenchRecord {
    pub fn from_run(problem: impl Into<String>, solver: impl Into<String>, r: &RunResult) -> Self {
        BenchRecord {
            problem: problem.into(),
            solver: solver.into(),
            status: r.status,
            iters: r.iters(),
            fevals: r.total_fev,
            wall_time_s: r.wall_time.as_secs_f64(),
            f_final: r.f_final,
            gnorm_final: r.gnorm_final,
        }
    }

    /// A run that could not produce a result at all.
    pub fn failed(problem: impl Into<String>, solver: impl Into<String>) -> Self {
        BenchRecord {
            problem: problem.into(),
            solver: solver.into(),
            status: RunStatus::NumericFailure,
            iters: 0,
            fevals: 0,
            wall_time_s: 0.0,
            f_final: f64::NAN,
            gnorm_final: f64::NAN,
        }
    }

    pub fn solved(&self) -> bool {
        self.status == RunStatus::Converged
    }
}
