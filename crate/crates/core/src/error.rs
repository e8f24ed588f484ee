use thiserror::Error;

/// Errors produced anywhere in the simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mass of particle {index} must be positive, got {value}")]
    NegativeMass { index: usize, value: f64 },

    #[error("coupling matrix is not symmetric at ({i}, {j}): {kij} != {kji}")]
    AsymmetricCoupling { i: usize, j: usize, kij: f64, kji: f64 },

    #[error("spring constant {what} must be a finite non-negative number, got {value}")]
    NegativeSpring { what: String, value: f64 },

    #[error("packet width of particle {index} must be positive, got {value}")]
    NonPositiveWidth { index: usize, value: f64 },

    #[error("hbar must be positive, got {0}")]
    NonPositiveHbar(f64),

    #[error("potential matrix is indefinite (mode eigenvalue {eigenvalue})")]
    IndefinitePotential { eigenvalue: f64 },

    #[error("network has {n} particles, the supported maximum is {cap}")]
    TooManyParticles { n: usize, cap: usize },

    #[error("system index {index} out of range for {n} particles")]
    InvalidSystemIndex { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("negative eigenvalue {0} below tolerance")]
    NegativeEigenvalue(f64),

    #[error("Gaussian term is not normalizable: {0}")]
    NotNormalizable(String),

    #[error("singular block in Gaussian factorization at pivot {0}")]
    SingularBlock(usize),

    #[error("grid too narrow at t = {t}: boundary density {boundary:e} exceeds {limit:e} of maximum")]
    GridTooNarrow { t: f64, boundary: f64, limit: f64 },

    #[error("invalid time: {0}")]
    InvalidTime(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("quadrature boundary mass too large on axis {axis}: {ratio:e}")]
    BoundaryMassTooLarge { axis: usize, ratio: f64 },

    #[error("grid resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config validation error: {0}")]
    Validation(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::NegativeEigenvalue(_)
                | Error::NotNormalizable(_)
                | Error::SingularBlock(_)
                | Error::GridTooNarrow { .. }
                | Error::BoundaryMassTooLarge { .. }
                | Error::ResolutionTooCoarse(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
