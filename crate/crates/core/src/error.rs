use thiserror::Error;

/// Errors raised by the lattice, operator, solver and verification layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid lattice geometry: {0}")]
    InvalidGeometry(String),

    #[error("site index {index} out of range for lattice with {len} sites")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("operation not applicable: {0}")]
    NotApplicable(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dual transform requires an even side length under periodic boundary conditions (K = {side})")]
    OddPeriodicDual { side: usize },

    #[error("operator is already in dual form")]
    AlreadyDual,

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("eigensolver failed: {0}")]
    EigenSolverFailed(String),

    #[error("well set is empty for mu = {mu}, delta = {delta}")]
    EmptyWells { mu: f64, delta: f64 },

    #[error("lattice with {sites} sites is too large for the brute-force oracle (max {max})")]
    TooLargeForOracle { sites: usize, max: usize },

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("invalid alpha {alpha}: must lie in (0, {upper})")]
    InvalidAlpha { alpha: f64, upper: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable variant name, used in reports and CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidGeometry(_) => "InvalidGeometry",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::NotApplicable(_) => "NotApplicable",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::OddPeriodicDual { .. } => "OddPeriodicDual",
            Error::AlreadyDual => "AlreadyDual",
            Error::InvalidPotential(_) => "InvalidPotential",
            Error::SolverDiverged { .. } => "SolverDiverged",
            Error::EigenSolverFailed(_) => "EigenSolverFailed",
            Error::EmptyWells { .. } => "EmptyWells",
            Error::TooLargeForOracle { .. } => "TooLargeForOracle",
            Error::HypothesisNotMet(_) => "HypothesisNotMet",
            Error::InvalidAlpha { .. } => "InvalidAlpha",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
