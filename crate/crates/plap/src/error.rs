use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("{path}:{line}: field `{field}`: {message}", line = line.map_or("?".to_string(), |l| l.to_string()))]
    Invalid {
        path: PathBuf,
        field: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{module}::{operation}: {source}")]
    Core {
        module: &'static str,
        operation: &'static str,
        source: plap_core::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn core(module: &'static str, operation: &'static str) -> impl FnOnce(plap_core::Error) -> Self {
        move |source| CliError::Core {
            module,
            operation,
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
