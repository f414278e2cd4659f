use std::io;

use thiserror::Error;

/// Errors produced by the distillation library.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands have incompatible dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix inversion was requested for a singular matrix.
    #[error("matrix is singular")]
    Singular,

    /// The requested number of pairs is outside the supported range.
    #[error("unsupported size m={0}; supported range is {1}")]
    UnsupportedSize(usize, &'static str),

    /// An enumeration exceeded its configured element limit.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A claimed isotropic basis is dependent or not self-orthogonal.
    #[error("invalid isotropic subspace: {0}")]
    InvalidSubspace(String),

    /// A numeric parameter lies outside its valid domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// A transversal cache file failed structural or checksum validation.
    #[error("corrupt cache: {0}")]
    CorruptCache(String),

    /// A cache file holds a different transversal than requested.
    #[error("cache count mismatch: {0}")]
    CountMismatch(String),

    /// A root-finding bracket did not enclose a sign change.
    #[error("solver failed: {0}")]
    Solver(String),

    /// An operation was configured inconsistently.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
