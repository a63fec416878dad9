use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the model, estimation, simulation and I/O layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The phase `(pi/2) exp(-lambda/t)` left `(0, pi)` or hit a sine pole.
    #[error("domain guard violated: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation that needs a constant sampling step was given irregular times.
    #[error("non-uniform spacing: {0}")]
    Spacing(String),

    #[error("no sign change of the score found in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("no convergence after {iterations} iterations: {reason}")]
    NoConvergence { iterations: usize, reason: String },

    /// The profile variance collapsed to zero; the lognormal density is undefined.
    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Validation { line: Option<usize>, message: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Spacing(_)
            | Error::Parse { .. }
            | Error::Validation { .. }
            | Error::LengthMismatch { .. }
            | Error::Io(_) => 1,
            Error::NoRoot { .. } | Error::NoConvergence { .. } | Error::Degenerate(_) => 2,
            Error::Domain(_) => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidInput(_) => "invalid_input",
            Error::Spacing(_) => "spacing",
            Error::NoRoot { .. } => "no_root",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Degenerate(_) => "degenerate",
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
