use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable slot {0} has no value in the evaluation point")]
    MissingVariable(usize),
    #[error("variable `{name}` must be strictly positive, got {value}")]
    NonPositive { name: String, value: f64 },
    #[error("monomial coefficient must be positive and finite, got {0}")]
    NonPositiveCoefficient(f64),
    #[error("a posynomial needs at least one term")]
    EmptyPosynomial,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Metzler: entry ({row},{col}) = {value}")]
    NotMetzler { row: usize, col: usize, value: f64 },
    #[error("matrix `{name}` has a negative entry ({row},{col}) = {value}")]
    NegativeEntry {
        name: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("matrix is not Hurwitz (spectral abscissa {0})")]
    NotHurwitz(f64),
    #[error("eigenvalue iteration did not converge")]
    EigenFailure,
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("oracle routes disagree: {0}")]
    RouteDisagreement(String),
    #[error("parametrized system has no r(θ)·R0 factorization of R(θ)")]
    MissingFactorization,
    #[error("system has no delay block")]
    MissingDelay,
    #[error("trade-off function violates monotonicity in `{0}`")]
    Monotonicity(String),
    #[error("invalid uncertainty structure: {0}")]
    InvalidStructure(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("{line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
