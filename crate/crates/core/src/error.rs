use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("{what} is not Hermitian (max |M - M^dagger| = {deviation:e})")]
    NotHermitian { what: &'static str, deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("pair potential is not even: V({displacement}) differs from its mirror by {deviation:e}")]
    ParityViolation { displacement: usize, deviation: f64 },

    #[error("rate must be strictly positive, got {0}")]
    NonPositiveRate(f64),

    #[error("invalid rate matrix: {0}")]
    InvalidRateMatrix(String),

    #[error("operator lists differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error(
        "positivity violated at t = {time}: minimum eigenvalue {min_eigenvalue:e}; \
         reduce the step size (dt = {dt:e})"
    )]
    PositivityViolation { time: f64, min_eigenvalue: f64, dt: f64 },

    #[error(
        "norm drift {rate:e} per unit time at t = {time} exceeds the 1e-3 budget; \
         reduce the step size (dt = {dt:e})"
    )]
    NormDrift { time: f64, rate: f64, dt: f64 },

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
