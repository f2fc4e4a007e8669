use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,

    #[error("non-finite value {value} in point {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("sample has dimension {0}; the coherent feature map is univariate")]
    NotScalar(usize),

    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("kernel family {0} does not satisfy k(x, x) = 1 and cannot be embedded as a state")]
    KernelNotNormalized(&'static str),

    #[error("truncation tolerance must lie in (0, 1), got {0}")]
    InvalidTolerance(f64),

    #[error(
        "truncation dimension {got} is below the policy minimum {required} \
         (|x|/sigma = {ratio}, tol = {tol})"
    )]
    TruncationTooSmall {
        required: usize,
        got: usize,
        ratio: f64,
        tol: f64,
    },

    #[error("|x|/sigma = {ratio} exceeds the truncation policy range {max}")]
    OutOfRange { ratio: f64, max: f64 },

    #[error("{states} states but {weights} weights")]
    LengthMismatch { states: usize, weights: usize },

    #[error("superposition has vanishing norm")]
    ZeroSuperposition,

    #[error("state is not normalized: squared norm {0}")]
    NotNormalized(f64),

    #[error("shot count must be at least 1")]
    InvalidShots,

    #[error("overlap with reference state {overlap} is below the floor {floor}")]
    OverlapTooSmall { overlap: f64, floor: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
