//! Seeded experiment runners.

pub mod report;
pub mod runners;
pub mod sampling;

pub use report::RunReport;
pub use runners::{run_dk_curves, run_distribution_study, run_iteration_benchmark, run_step_sweep};
pub use sampling::sample_simplex;
