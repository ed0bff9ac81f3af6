use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("degenerate anchor geometry: {0}")]
    Geometry(String),

    #[error(
        "multilateration did not converge after {iterations} iterations (last step {last_step:e})"
    )]
    NonConvergence {
        iterations: usize,
        last_step: f64,
        last_iterate: [f64; 3],
    },

    #[error("Riccati iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    DareNonConvergence { iterations: usize, residual: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("measurement frame inconsistent: {0}")]
    Inconsistent(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("episode aborted at step {step}: {source}")]
    EpisodeAborted {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_shape(
    context: &'static str,
    rows: usize,
    cols: usize,
    want_rows: usize,
    want_cols: usize,
) -> Result<()> {
    if rows != want_rows || cols != want_cols {
        return Err(Error::Dimension {
            context,
            expected: format!("{want_rows}x{want_cols}"),
            got: format!("{rows}x{cols}"),
        });
    }
    Ok(())
}
