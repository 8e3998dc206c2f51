use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operation is undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("scale factor must be nonzero")]
    ZeroScale,
    #[error("variable index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("restriction needs at least two variables, got {n}")]
    DimensionTooSmall { n: usize },
    #[error("polynomial degree {degree} exceeds the power cap m = {m}")]
    DegreeExceedsM { degree: usize, m: usize },
    #[error("all samples are equal; no density range can be built")]
    DegenerateRange,
    #[error("eps = {eps} is below the grid resolution (needs eps >= {min})")]
    EpsilonBelowResolution { eps: f64, min: f64 },
    #[error("unsupported oracle kind `{0}`")]
    UnsupportedKind(String),
    #[error("densities live on grids that cannot be aligned: {0}")]
    GridMismatch(String),
    #[error("variance of the polynomial is zero")]
    ZeroVariance,
    #[error("distance must be positive, got {0}")]
    NonpositiveDistance(f64),
    #[error("characteristic function is inside the noise floor on the whole t grid")]
    InsufficientDecay,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
