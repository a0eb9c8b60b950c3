use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("not an orthogonal projection: {0}")]
    NotProjection(String),

    #[error("Bloch vector has length {0} > 1")]
    BlochOutOfBall(f64),

    #[error("instrument is not unital (deviation {0:e})")]
    NotUnital(f64),

    #[error("map is not an isometry (deviation {0:e})")]
    NotIsometry(f64),

    #[error("{what} must have at least one element")]
    Empty { what: &'static str },

    #[error("dimension {dim} does not factor as {d1} x {d2}")]
    NotFactorizable { dim: usize, d1: usize, d2: usize },

    #[error("enumeration cap exceeded: {distinct} distinct spectral values (max {cap})")]
    EnumerationCap { distinct: usize, cap: usize },

    #[error("coherence pair vectors are not orthogonal (overlap {0:e})")]
    NonOrthogonalPair(f64),

    #[error("coherence pair eigenvalues are degenerate (x = y = {0})")]
    DegeneratePair(f64),

    #[error("coherence pair: {0}")]
    InvalidPair(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("normalization matrix is singular after {attempts} attempts")]
    SingularNormalization { attempts: usize },

    #[error("invalid fixture: {0}")]
    Fixture(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
