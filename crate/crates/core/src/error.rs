use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Each variant maps onto a stable machine-readable kind via [`Error::kind`],
/// which the command-line front end reports on standard error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("ill-conditioned input: {0}")]
    Conditioning(String),

    #[error("degenerate spectrum: {0}")]
    Degeneracy(String),

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("structure violation: {0}")]
    Structure(String),

    #[error("parse error at {location}: {detail}")]
    Parse { location: String, detail: String },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("register truncation leak: top-bin mass {top_mass:e} exceeds tolerance; try n_max >= {suggested_n_max}")]
    TruncationLeak { top_mass: f64, suggested_n_max: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("waiting-time distribution not normalizable (mass {mass}); clockwork has a dark state")]
    DarkState { mass: f64 },

    #[error("rate extraction methods disagree: {0}")]
    Consistency(String),

    #[error("precision identity violated: {0}")]
    IdentityFailure(String),

    #[error("record too short: {0}")]
    Length(String),

    #[error("insufficient data: {0}")]
    Data(String),

    #[error("step too large for first-order map: {0}")]
    Stability(String),

    #[error("horizon too short: {0}")]
    Horizon(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical rank determination failed: {0}")]
    NumericalRank(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Conditioning(_) => "conditioning",
            Error::Degeneracy(_) => "degeneracy",
            Error::Validation(_) => "validation",
            Error::Structure(_) => "structure",
            Error::Parse { .. } => "parse",
            Error::Integration(_) => "integration",
            Error::TruncationLeak { .. } => "truncation",
            Error::Precondition(_) => "precondition",
            Error::DarkState { .. } => "dark_state",
            Error::Consistency(_) => "consistency",
            Error::IdentityFailure(_) => "identity",
            Error::Length(_) => "length",
            Error::Data(_) => "data",
            Error::Stability(_) => "stability",
            Error::Horizon(_) => "horizon",
            Error::Unsupported(_) => "unsupported",
            Error::NumericalRank(_) => "numerical_rank",
            Error::Shape(_) => "shape",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
