//! File formats and the command-line front end.

pub mod case;
pub mod cli;
pub mod records;
pub mod table;

use crate::error::ModelError;
use std::path::PathBuf;
use thiserror::Error;

pub use case::{load_case, parse_case, parse_scenario, Case, Scenario};
pub use records::ResultRecord;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{origin}: field `{field}`: {message}")]
    Field { origin: String, field: String, message: String },
    #[error("{origin}: {} integrity error(s):\n{}", .errors.len(), render_list(.errors))]
    Integrity { origin: String, errors: Vec<ModelError> },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Usage(String),
}

fn render_list(errors: &[ModelError]) -> String {
    errors.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n")
}
