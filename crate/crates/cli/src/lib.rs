//! Batch driver for inequality-certificate scenarios: a validating JSON
//! scenario loader, a deterministic seeded runner, and JSONL/CSV report
//! emission.

pub mod report;
pub mod runner;
pub mod scenario;

pub use report::{OracleLine, Report, SummaryRow};
pub use runner::{run_oracle, run_sweep, run_verify, RunError};
pub use scenario::{Scenario, ScenarioError};
