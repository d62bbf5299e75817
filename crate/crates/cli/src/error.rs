use std::fmt::Display;
use std::path::Path;

use elastic_core::io::DocumentError;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// Bad input data: every core error is a validation failure here.
    pub fn input(what: &str, e: elastic_core::Error) -> Self {
        CliError::Validation(format!("{what}: {e}"))
    }

    /// Failure while computing: numerical breakdowns get their own class.
    pub fn compute(e: elastic_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }

    pub fn document(path: &Path, e: DocumentError) -> Self {
        match e {
            DocumentError::Io(e) => CliError::io(path, e),
            other => CliError::Validation(format!("{}: {other}", path.display())),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}
