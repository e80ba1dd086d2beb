//! Scenario files, runs, result files and the invariant suite behind the
//! command-line tool. Everything here works in `f64`.

mod csv;
mod run;
mod schema;
mod verify;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::error::Error;

pub use csv::{emit_trajectory, read_trajectory, summary_path};
pub use run::{
    receding_cost, run_scenario, write_outputs, CostSummary, MpcSummary, OracleSummary, OutputFiles, RunReport,
    StageRow, Timings,
};
pub use schema::{load_cloud, load_scenario, CloudSpec, Demand, Materialized, Mode, Overrides, Scenario, SegmentSpec};
pub use verify::{verify_scenario, CheckOutcome, CheckStatus};

/// Failures of the scenario layer, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    Invalid(String),

    #[error("{}{error}", context.as_deref().map(|c| format!("{c}: ")).unwrap_or_default())]
    Core { context: Option<String>, error: Error },

    #[error("invariant check failed: {0}")]
    Invariant(String),
}

impl ScenarioError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        ScenarioError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        ScenarioError::Invalid(message.into())
    }

    pub(crate) fn context(self, what: &str) -> Self {
        match self {
            ScenarioError::Core { context: None, error } => ScenarioError::Core {
                context: Some(what.to_string()),
                error,
            },
            ScenarioError::Invalid(m) => ScenarioError::Invalid(format!("{what}: {m}")),
            other => other,
        }
    }

    /// 1 for invalid input, 2 for numerical failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Io { .. } => 3,
            ScenarioError::Parse { .. } | ScenarioError::Invalid(_) => 1,
            ScenarioError::Core { error, .. } if error.is_numerical() => 2,
            ScenarioError::Core { .. } => 1,
            ScenarioError::Invariant(_) => 2,
        }
    }
}

impl From<Error> for ScenarioError {
    fn from(error: Error) -> Self {
        ScenarioError::Core { context: None, error }
    }
}
