use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

/// Failures surfaced by the command-line front end.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("cannot parse value '{value}' in column '{column}' at row {row}")]
    ParseError {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column '{column}' must contain only 0 or 1 (row {row})")]
    NonBinary { column: String, row: usize },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error(transparent)]
    Core(#[from] aps_iv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// 2 for configuration, 3 for data and 4 for estimation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingColumn(_)
            | CliError::ParseError { .. }
            | CliError::NonBinary { .. }
            | CliError::Io { .. } => 3,
            CliError::Estimation(_) => 4,
            CliError::Core(e) if e.is_estimation() => 4,
            CliError::Core(aps_iv::Error::Config(_))
            | CliError::Core(aps_iv::Error::InvalidParameter(_)) => 2,
            CliError::Core(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::MissingColumn(_) => "missing_column",
            CliError::ParseError { .. } => "parse_error",
            CliError::NonBinary { .. } => "non_binary",
            CliError::Io { .. } => "io",
            CliError::Estimation(_) => "estimation",
            CliError::Core(e) if e.is_estimation() => "estimation",
            CliError::Core(_) => "model",
        }
    }

    /// Single-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Payload<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
            #[serde(skip_serializing_if = "Option::is_none")]
            row: Option<usize>,
            #[serde(skip_serializing_if = "Option::is_none")]
            column: Option<&'a str>,
        }
        let (row, column) = match self {
            CliError::ParseError { row, column, .. } | CliError::NonBinary { row, column } => {
                (Some(*row), Some(column.as_str()))
            }
            CliError::MissingColumn(c) => (None, Some(c.as_str())),
            _ => (None, None),
        };
        serde_json::to_string(&Payload {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
            row,
            column,
        })
        .expect("error payload serializes")
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
