use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports.
///
/// Variant names are stable: the CLI prints them verbatim in its error
/// messages and reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix `{0}` contains NaN or infinite entries")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectra overlap: {0}")]
    SpectraOverlap(String),

    #[error("mass matrix is numerically singular (reciprocal condition {rcond:e})")]
    SingularMass { rcond: f64 },

    #[error("evaluation point ({re}, {im}) is within tolerance of a pole")]
    NearPole { re: f64, im: f64 },

    #[error("derivative order {0} exceeds the supported maximum of 8")]
    OrderTooHigh(usize),

    #[error("the pair (L, S) is not observable (rank {rank} < {expected})")]
    ObservabilityFailure { rank: usize, expected: usize },

    #[error("the pair (Q, R) is not controllable (rank {rank} < {expected})")]
    ControllabilityFailure { rank: usize, expected: usize },

    #[error("tangential direction must be nonzero")]
    ZeroDirection,

    #[error("reduced pencil is degenerate: {0}")]
    PencilDegenerate(String),

    #[error("shift matrix must be diagonalizable with negative real eigenvalues: {0}")]
    NonNegativeEigenvalue(String),

    #[error("passivity precondition violated: {0}")]
    PassivityPreconditionViolated(String),

    #[error("projection basis is rank deficient (rank {rank} < {expected})")]
    RankDeficientPi { rank: usize, expected: usize },

    #[error("product of projection bases is singular or ill-conditioned (condition {cond:e})")]
    SingularProduct { cond: f64 },

    #[error("constraint matrix is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("projection basis has no left null space to place poles with")]
    NoNullSpace,

    #[error("derivative matching requires a position-only output (C1 = 0)")]
    WrongOutputStructure,

    #[error("duplicate frequency in data: ({re}, {im})")]
    DuplicateFrequency { re: f64, im: f64 },

    #[error("divided difference denominator too small ({gap:e})")]
    DividedDifferenceBlowup { gap: f64 },

    #[error("zero driving frequency is not allowed for this construction")]
    SingularFrequency,

    #[error("eigenvalue iteration did not converge")]
    EigenSolverFailed,

    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "NonFinite",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::SpectraOverlap(_) => "SpectraOverlap",
            Error::SingularMass { .. } => "SingularMass",
            Error::NearPole { .. } => "NearPole",
            Error::OrderTooHigh(_) => "OrderTooHigh",
            Error::ObservabilityFailure { .. } => "ObservabilityFailure",
            Error::ControllabilityFailure { .. } => "ControllabilityFailure",
            Error::ZeroDirection => "ZeroDirection",
            Error::PencilDegenerate(_) => "PencilDegenerate",
            Error::NonNegativeEigenvalue(_) => "NonNegativeEigenvalue",
            Error::PassivityPreconditionViolated(_) => "PassivityPreconditionViolated",
            Error::RankDeficientPi { .. } => "RankDeficientPi",
            Error::SingularProduct { .. } => "SingularProduct",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NoNullSpace => "NoNullSpace",
            Error::WrongOutputStructure => "WrongOutputStructure",
            Error::DuplicateFrequency { .. } => "DuplicateFrequency",
            Error::DividedDifferenceBlowup { .. } => "DividedDifferenceBlowup",
            Error::SingularFrequency => "SingularFrequency",
            Error::EigenSolverFailed => "EigenSolverFailed",
            Error::ParseError { .. } => "ParseError",
            Error::Io(_) => "Io",
        }
    }

    /// True for malformed input (files, shapes, parameters) as opposed to a
    /// numerical precondition failing on well-formed input.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::InvalidParameter(_)
                | Error::ParseError { .. }
                | Error::Io(_)
                | Error::NonFinite(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::ParseError {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
