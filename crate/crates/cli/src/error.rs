use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Solver(elweno::Error),

    #[error("{0} check(s) failed")]
    SelfTest(usize),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    /// 2 for bad input, 3 for numerical failure, 4 for a stalled solver.
    pub fn exit_code(&self) -> i32 {
        use elweno::Error as E;
        match self {
            Self::Config(_) | Self::Io { .. } => 2,
            Self::Solver(E::Config(_) | E::InvalidGrid(_) | E::NonPeriodicGrid) => 2,
            Self::Solver(E::SolverNonConvergence { .. }) => 4,
            Self::Solver(_) | Self::SelfTest(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            4 => "solver",
            _ => "numerical",
        }
    }
}

impl From<elweno::Error> for CliError {
    fn from(e: elweno::Error) -> Self {
        match e {
            elweno::Error::Config(m) => Self::Config(m),
            other => Self::Solver(other),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        let path = PathBuf::from("<csv>");
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Self::Io { path, source },
            other => Self::Io { path, source: std::io::Error::other(format!("{other:?}")) },
        }
    }
}
