use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_INVALID: i32 = 4;
pub const EXIT_COMPUTE: i32 = 5;
pub const EXIT_OUTPUT: i32 = 6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Input { path: PathBuf, source: secnet::Error },

    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] secnet::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use secnet::Error as E;
        match self {
            CliError::Input { .. } => EXIT_INPUT,
            CliError::Output { .. } => EXIT_OUTPUT,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Core(e) => match e {
                E::InvalidParameter(_)
                | E::InvalidGraph(_)
                | E::Disconnected { .. }
                | E::ExactCapExceeded { .. } => EXIT_INVALID,
                E::Io(_) | E::Json(_) | E::Parse(_) => EXIT_INPUT,
                E::RejectionCapExceeded { .. }
                | E::LatticeSaturated { .. }
                | E::NoConvergence { .. }
                | E::Singular(_)
                | E::WorkCapExceeded { .. }
                | E::Unbalanced(_) => EXIT_COMPUTE,
            },
        }
    }
}
