use thiserror::Error;

/// Every failure the workbench can report.
///
/// The variants are grouped by how the CLI maps them to exit codes:
/// parameter problems are usage errors, broken invariants are verification
/// failures, and the remaining variants are numeric failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {predicate}")]
    InvalidParams { predicate: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("C[{j}] is not an integer (denominator {denominator})")]
    NonIntegral { j: usize, denominator: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("precision unreachable: {0}")]
    PrecisionUnreachable(String),

    #[error("point lies within {distance} of a pole")]
    PoleProximity { distance: f64 },

    #[error("point lies on a branch cut: {0}")]
    BranchCut(String),

    #[error("bracketing failed: {0}")]
    Bracketing(String),

    #[error("{strategy} strategy failed: {diagnostics}")]
    StrategyFailure { strategy: String, diagnostics: String },

    #[error("root census mismatch: {0}")]
    CensusMismatch(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),
}

impl Error {
    pub(crate) fn params(predicate: impl Into<String>) -> Self {
        Error::InvalidParams { predicate: predicate.into() }
    }

    /// Broad classification used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParams { .. } | Error::InvalidInput(_) => ErrorKind::Usage,
            Error::NonIntegral { .. }
            | Error::Verification(_)
            | Error::Bracketing(_)
            | Error::CensusMismatch(_) => ErrorKind::Verification,
            Error::PrecisionUnreachable(_)
            | Error::PoleProximity { .. }
            | Error::BranchCut(_)
            | Error::StrategyFailure { .. }
            | Error::QuadratureNonConvergence(_) => ErrorKind::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Verification,
    Numeric,
}

pub type Result<T> = std::result::Result<T, Error>;
