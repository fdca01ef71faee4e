use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("balls are not disjoint: center distance {distance} <= combined radius {radius}")]
    NotDisjoint { distance: f64, radius: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{excluded} of {trials} trials excluded after solver failures (budget {budget})")]
    SolverBudget {
        excluded: usize,
        trials: usize,
        budget: usize,
    },

    #[error("fixed point not reached within {0} iterations")]
    FixedPoint(usize),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("grid cell m={m}, sigma={sigma}: {source}")]
    InCell {
        m: usize,
        sigma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SolverBudget { .. } => 2,
            Error::Io(_) => 3,
            Error::InCell { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Malformed(format!("{other:?}")),
            }
        } else {
            Error::Malformed(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
