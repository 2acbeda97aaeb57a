use thiserror::Error;

/// Errors raised by measurements, constructors and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("basis is not orthonormal (Gram deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("rank-deficient point set")]
    RankDeficient,

    #[error("empty support: no atoms in the region")]
    EmptySupport,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("base point is not in the support (distance {0:e})")]
    NotInSupport(f64),

    #[error("not a local maximum: {0}")]
    NotLocalMax(String),

    #[error("degenerate simplex {index} (measure {measure:e})")]
    DegenerateSimplex { index: usize, measure: f64 },

    #[error("multi-valued cell {cell:?}: spread {spread:e} exceeds {threshold:e}")]
    MultiValued { cell: Vec<i64>, spread: f64, threshold: f64 },

    #[error("support gap at cell {cell:?}")]
    SupportGap { cell: Vec<i64> },

    #[error("CFL violation: cfl = {0} must lie in (0, 1]")]
    Cfl(f64),

    #[error("gradient blow-up at frame {frame}: max |grad u| = {max_grad}")]
    GradientBlowUp { frame: usize, max_grad: f64 },

    #[error("kernel vanishes at the evaluation point")]
    KernelZero,

    #[error("test function is negative ({value:e}) at a sampled point")]
    NegativeTestFunction { value: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
