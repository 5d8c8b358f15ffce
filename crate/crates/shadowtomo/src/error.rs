use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("operator entanglement too large: generator extent {extent} exceeds cap {cap}")]
    ExtentCap { extent: usize, cap: usize },

    #[error("tomographically incomplete ensemble: denominator {value} for subset {subset:#x}")]
    IncompleteEnsemble { subset: u64, value: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("insufficient points for fit: need at least {need}, got {got}")]
    InsufficientPoints { need: usize, got: usize },

    #[error("metadata mismatch: {0}")]
    Mismatch(String),

    #[error("empty snapshot store")]
    EmptyStore,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Length { .. } => "length",
            Error::NonFinite(_) => "non-finite",
            Error::ExtentCap { .. } => "extent-cap",
            Error::IncompleteEnsemble { .. } => "incomplete-ensemble",
            Error::Invalid(_) => "invalid",
            Error::Parse { .. } => "parse",
            Error::InsufficientPoints { .. } => "insufficient-points",
            Error::Mismatch(_) => "mismatch",
            Error::EmptyStore => "empty-store",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
