use thiserror::Error;

use crate::dbap::DbapState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("basis columns are not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("solver produced non-finite values at iteration {iteration}")]
    Diverged { iteration: usize, state: Box<DbapState> },

    #[error("anchor Gram block has numerical rank {rank} < {dim}: anchors do not span the embedding space")]
    DegenerateAnchors { rank: usize, dim: usize },

    #[error("malformed PDB record on line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
