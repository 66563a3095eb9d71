//! Error type shared by every module of the simulator.

use std::path::PathBuf;

use thiserror::Error;

/// Failure modes of configuration, sizing and numerical code paths.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter combination that the simulator cannot represent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input buffers that do not frame into whole symbols or slots.
    #[error("framing error: {0}")]
    Framing(String),

    /// A buffer whose length disagrees with the layout it is used with.
    #[error("sizing error: {0}")]
    Sizing(String),

    /// A transmitted pilot value of zero cannot be inverted.
    #[error("singular pilot: zero transmitted value at pilot index {0}")]
    SingularPilot(usize),

    /// Interpolation needs at least two pilot observations.
    #[error("insufficient pilots: need at least 2, got {0}")]
    InsufficientPilots(usize),

    /// An API called with arguments that violate its contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// Matrix factorization failed even after the diagonal-loading fallback.
    #[error("matrix factorization failed after diagonal-loading fallback")]
    SingularMatrix,

    /// Filesystem failure, reported with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
