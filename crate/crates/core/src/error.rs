use thiserror::Error;

/// Errors raised by the inference, simulation and validation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no attractor found in [{x_min}, {x_max}]")]
    NoAttractorFound { x_min: f64, x_max: f64 },

    #[error("transition row for source {source_index} has no grid point inside the 4-sigma window")]
    EmptyRow { source_index: usize },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("trajectory never crosses the tipping point")]
    NoTransitions,

    #[error("r^2 evaluated to {0:e}, quadrature failure")]
    NegativeRadicand(f64),

    #[error("empty cohort")]
    EmptyCohort,

    #[error("scaled accuracy undefined: A_max {a_max} <= U_CI {u_ci}")]
    DegenerateScale { a_max: f64, u_ci: f64 },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable code for the error variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateData(_) => "DegenerateData",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NoAttractorFound { .. } => "NoAttractorFound",
            Error::EmptyRow { .. } => "EmptyRow",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NoTransitions => "NoTransitions",
            Error::NegativeRadicand(_) => "NegativeRadicand",
            Error::EmptyCohort => "EmptyCohort",
            Error::DegenerateScale { .. } => "DegenerateScale",
            Error::Parse { .. } => "ParseError",
            Error::SchemaVersion { .. } => "SchemaMismatch",
            Error::Io(_) => "IoError",
            Error::Json(_) => "ParseError",
            Error::Csv(_) => "ParseError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
