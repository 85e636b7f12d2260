use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    BadInput { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("invalid instance {name}: {checks}")]
    InvalidInstance { name: String, checks: String },
    #[error("solution does not match instance: {0}")]
    Mismatch(String),
    #[error("generation failed: {0}")]
    Generation(#[from] rvrp_core::generator::GenerateError),
    #[error("no feasible initial solution: {0}")]
    Construction(String),
    #[error("solution is infeasible: {0}")]
    Infeasible(String),
    #[error("every experiment run failed")]
    AllRunsFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Infeasible(_) => 1,
            Self::Io { .. } | Self::BadInput { .. } | Self::Usage(_) | Self::InvalidInstance { .. } | Self::Mismatch(_) => 2,
            Self::Generation(_) => 3,
            Self::Construction(_) => 4,
            Self::AllRunsFailed => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn bad_input(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::BadInput { path: path.into(), message: message.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        let io = CliError::io("x", std::io::Error::other("boom"));
        assert_eq!(io.exit_code(), 2);
        assert_eq!(CliError::Infeasible("capacity".into()).exit_code(), 1);
        assert_eq!(CliError::Mismatch("id".into()).exit_code(), 2);
        assert_eq!(CliError::Construction("c".into()).exit_code(), 4);
        assert_eq!(CliError::AllRunsFailed.exit_code(), 5);
        let g = rvrp_core::generator::GenerateError::UnknownRow("Osaba_1".into());
        assert_eq!(CliError::from(g).exit_code(), 3);
    }
}
