use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("direction {axis} out of range for a {nu}-dimensional lattice")]
    DirectionOutOfRange { axis: usize, nu: usize },

    #[error("momentum {0} is not on the requested grid")]
    OffGrid(String),

    #[error("sector mismatch: {0}")]
    SectorMismatch(String),

    #[error("operators act on different bases")]
    BasisMismatch,

    #[error("dimension {dim} exceeds the configured limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires nu = {expected}, lattice has nu = {found}")]
    WrongDimension { expected: usize, found: usize },

    #[error("operator support straddles the reflection hyperplane")]
    StraddlesHyperplane,

    #[error("integral diverges: estimates {ladder:?} grow without bound under refinement")]
    Divergent { ladder: Vec<(usize, f64)> },

    #[error("finite-temperature bound needs I_nu, which is infinite for nu = {nu}")]
    FiniteTemperatureUnavailable { nu: usize },

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("negative radicand {0:e}")]
    NegativeRadicand(f64),

    #[error("kernel value at {momentum} has imaginary part {imag:e}")]
    ComplexKernel { momentum: String, imag: f64 },

    #[error("kernel support violates the cutoff {eps0}: nonzero at {momentum}")]
    SupportViolation { eps0: f64, momentum: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
