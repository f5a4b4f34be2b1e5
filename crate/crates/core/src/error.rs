use thiserror::Error;

use crate::gf2::BitVector;

/// Errors produced by the learners, the example sources and the harness.
///
/// Everything except [`Error::Io`] is a contract violation: either the caller
/// passed parameters outside the documented ranges, or the example stream was
/// not labeled by a weight-k parity.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected} bits, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("affine space has rank {rank} < dimension {dim}; no unique point")]
    NotSingleton { rank: usize, dim: usize },

    #[error("affine space is empty")]
    EmptySpace,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{what}: {required} exceeds budget {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: String,
        budget: u64,
    },

    #[error("every chart is empty; the stream is not consistent with any weight-k parity in the cover")]
    AllChartsEmpty,

    #[error("no candidate parity is consistent with the stream")]
    InconsistentStream,

    #[error("sample budget exhausted after {samples} examples")]
    BudgetExhausted {
        samples: u64,
        best: Option<BitVector>,
    },

    #[error("no flip set produced a candidate hypothesis")]
    NoCandidates,

    #[error("example source exhausted")]
    SourceExhausted,

    #[error("could not find a covering family after {attempts} attempts")]
    CoverNotFound { attempts: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
