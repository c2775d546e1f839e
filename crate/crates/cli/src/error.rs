use std::path::Path;

use thiserror::Error;

/// Failure of a command, grouped by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration, arguments or input documents.
    #[error("configuration error: {0}")]
    Config(String),
    /// A concrete state outside the controller domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A reference to something that does not exist: a cell id, a built-in
    /// scenario, an input file.
    #[error("reference error: {0}")]
    Reference(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Domain(_) => 3,
            Self::Reference(_) => 4,
            Self::Internal(_) => 5,
        }
    }

    /// Error for a failed read of the input file at `path`.
    pub fn read(path: &Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            Self::Reference(format!("{}: no such file", path.display()))
        } else {
            Self::Internal(format!("{}: {e}", path.display()))
        }
    }

    pub fn write(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Internal(format!("cannot write {}: {e}", path.display()))
    }
}

impl From<rescot_core::Error> for CliError {
    fn from(e: rescot_core::Error) -> Self {
        use rescot_core::Error as E;
        let msg = e.to_string();
        match e {
            E::OutOfControllerDomain { .. } => Self::Domain(msg),
            E::UnknownState { .. } => Self::Reference(msg),
            E::InvalidBox(_)
            | E::InvalidProblem(_)
            | E::InvalidGrid(_)
            | E::ColorStraddle { .. }
            | E::InvalidArgument(_)
            | E::Format(_)
            | E::Json(_) => Self::Config(msg),
            E::IntegrationDiverged { .. }
            | E::OracleTooLarge { .. }
            | E::NonTermination(_)
            | E::Inconsistent(_)
            | E::Io(_) => Self::Internal(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
