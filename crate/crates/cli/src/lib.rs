//! Library side of the `tbls` command: error classification and the
//! benchmark harness.

pub mod bench;

use thiserror::Error;

use tbls_core::format::ParseError;
use tbls_core::gen::GenError;
use tbls_core::oracle::OracleError;
use tbls_core::{Kind, ModelError, SolveError};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "TBLS_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input, unsupported requests.
    #[error("{0}")]
    Input(String),
    /// Failures writing results.
    #[error("i/o error: {0}")]
    Io(String),
    /// Broken invariants inside the tool.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 1 for input errors, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Io(_) | CliError::Internal(_) => 2,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl CliError {
    pub fn parse(path: &std::path::Path, e: ParseError) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

pub fn parse_kind(s: &str) -> Result<Kind, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "smti" => Ok(Kind::Smti),
        "hrt" => Ok(Kind::Hrt),
        _ => Err(CliError::Input(format!(
            "unknown kind `{s}` (expected smti or hrt)"
        ))),
    }
}
