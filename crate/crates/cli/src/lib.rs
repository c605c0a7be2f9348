//! Command-line front end: configuration, evaluation runs, run-directory
//! persistence and the analysis commands.

pub mod config;
pub mod error;
pub mod eval;
pub mod tools;

pub use config::{BackendConfig, Config, Overrides, RunSettings};
pub use error::{CliError, ExitKind};
pub use eval::{prepare, run_eval, EvalOutcome, Prepared, RunManifest, RunRecord, TaskReport};
