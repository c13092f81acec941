//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("not Hermitian: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("trace {trace:.12} deviates from 1 beyond tolerance {tol:.3e}")]
    TraceNotOne { trace: f64, tol: f64 },

    #[error("not positive semidefinite: min eigenvalue {min_eig:.3e} below -{tol:.3e}")]
    NotPositiveSemidefinite { min_eig: f64, tol: f64 },

    #[error("eigen/SVD decomposition did not converge")]
    DecompositionFailed,

    #[error("Kraus operator list is empty")]
    EmptyKraus,

    #[error("Kraus completeness violated: ||sum Vi†Vi - I|| = {residual:.3e} exceeds {tol:.3e}")]
    NotTracePreserving { residual: f64, tol: f64 },

    #[error("channel is not bistochastic: ||sum Vi Vi† - I|| = {residual:.3e} exceeds {tol:.3e}")]
    NotBistochastic { residual: f64, tol: f64 },

    #[error("channel is not ergodic: {reason}")]
    NotErgodic { reason: String },

    #[error("superoperator entries not real: max imaginary part {max_imag:.3e}")]
    SuperoperatorNotReal { max_imag: f64 },

    #[error("ergodicity verdicts disagree: {0}")]
    VerdictMismatch(String),

    #[error("state pair is degenerate: |<psi|phi>| too close to 1 to orthogonalize")]
    DegeneratePair,

    #[error("channel is outside the sharp-bound class (not self-adjoint, not a bistochastic qubit channel, not declared a qubit product)")]
    NotInSharpClass,

    #[error("contraction rate {c} is not strictly below 1")]
    NotStrictlyContractive { c: f64 },

    #[error("orbit aborted at step {step}: accumulated Hermiticity drift {drift:.3e} exceeds {limit:.3e}")]
    OrbitDrift { step: usize, drift: f64, limit: f64 },

    #[error("contraction audit inconclusive after {rounds} refinement rounds: max sampled ratio {max_ratio:.9} vs estimate {c_lower:.9}")]
    InconclusiveAudit {
        rounds: usize,
        max_ratio: f64,
        c_lower: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("channel file invalid: {0}")]
    ChannelFile(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit-code class used by the CLI: 2 for invalid input, 3 for an
    /// inconclusive audit, 1 for everything else that aborts a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InconclusiveAudit { .. } => 3,
            Error::Io(_) => 2,
            Error::Json(_) => 2,
            Error::ChannelFile(_) => 2,
            Error::InvalidParameter(_) => 2,
            Error::NotSquare { .. }
            | Error::DimensionMismatch { .. }
            | Error::NonFinite
            | Error::NotHermitian { .. }
            | Error::TraceNotOne { .. }
            | Error::NotPositiveSemidefinite { .. }
            | Error::EmptyKraus
            | Error::NotTracePreserving { .. }
            | Error::NotBistochastic { .. }
            | Error::NotErgodic { .. }
            | Error::NotInSharpClass
            | Error::NotStrictlyContractive { .. } => 2,
            _ => 1,
        }
    }
}
