use thiserror::Error;

use crate::geodesic::GeodesicState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("jet order exhausted: {0}")]
    OrderExhausted(String),

    #[error("undetermined: {0}")]
    Undetermined(String),

    #[error("degeneracy mismatch: {0}")]
    DegeneracyMismatch(String),

    #[error("integrator exceeded {max_steps} steps at s = {s}")]
    StepLimitExceeded { max_steps: usize, s: f64 },

    /// The state left the configured bound; `partial` keeps the path computed so far.
    #[error("geodesic blew up near s = {s}")]
    BlowUp { s: f64, partial: Box<Vec<GeodesicState>> },

    #[error("quotient branch requested too close to s = 0 (|s| = {0:e})")]
    NearSingularQuotient(f64),

    #[error("frame unavailable: {0}")]
    FrameUnavailable(String),

    #[error("malformed nabla-type: {0}")]
    MalformedType(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("resample limit reached: {0}")]
    ResampleLimit(String),

    #[error("{0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "SyntaxError",
            Error::UnknownVariable(_) => "UnknownVariable",
            Error::Domain(_) => "DomainError",
            Error::OrderExhausted(_) => "OrderExhausted",
            Error::Undetermined(_) => "Undetermined",
            Error::DegeneracyMismatch(_) => "DegeneracyMismatch",
            Error::StepLimitExceeded { .. } => "StepLimitExceeded",
            Error::BlowUp { .. } => "BlowUp",
            Error::NearSingularQuotient(_) => "NearSingularQuotient",
            Error::FrameUnavailable(_) => "FrameUnavailable",
            Error::MalformedType(_) => "MalformedType",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::ResampleLimit(_) => "ResampleLimit",
            Error::Parse(_) => "ParseError",
            Error::Validation(_) => "ValidationError",
            Error::Io(_) => "IoError",
        }
    }
}
