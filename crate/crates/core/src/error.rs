use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point} lies within {tolerance:e} of the pole {pole}")]
    PoleProximity {
        point: Complex64,
        pole: Complex64,
        tolerance: f64,
    },

    #[error("every coordinate of the map is constant and equal to the target")]
    DegenerateEquation,

    #[error("map has poles; a polynomial map is required")]
    NotPolynomial,

    #[error("codimension still changing at degree cap {cap} (last values {recent:?})")]
    NoStabilization { cap: usize, recent: Vec<usize> },

    #[error("measure has no nodes")]
    EmptyMeasure,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "quadrature exactness {exactness} is too coarse for degree {degree} (need at least {required})"
    )]
    QuadratureTooCoarse {
        exactness: usize,
        degree: usize,
        required: usize,
    },

    #[error("measure is atomic; analysis requires a discretized continuous measure")]
    AtomicMeasure,

    #[error("need at least {needed} points for growth classification, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("constant sequence is not non-decreasing at index {index}")]
    NotMonotone { index: usize },

    #[error("basis span has numerical rank zero on the measure")]
    RankZero,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical breakdowns, as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureTooCoarse { .. }
                | Error::NoStabilization { .. }
                | Error::RankZero
                | Error::PoleProximity { .. }
                | Error::DegenerateEquation
        )
    }
}
