use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("no connected draw found after {attempts} attempts; the requested density is probably too low")]
    RejectionCapExceeded { attempts: usize },

    #[error("lattice construction saturated with {remaining} edges left to place")]
    LatticeSaturated { remaining: usize },

    #[error("{patches} patches exceed the exact-analysis cap of {cap}")]
    ExactCapExceeded { patches: usize, cap: usize },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("splitting level {level} exceeded the work cap of {cap} attempts")]
    WorkCapExceeded { level: usize, cap: u64 },

    #[error("unbalanced design: {0}")]
    Unbalanced(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
