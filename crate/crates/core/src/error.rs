use thiserror::Error;

/// Errors raised by the solver, the diagnostics and the CLI plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: a parameter, a shape, a range or a configuration entry.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Several configuration violations, each with its key path.
    #[error("configuration rejected:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<Violation>),

    /// A non-finite value appeared while time stepping.
    #[error("numerical failure at t = {t}: {what}")]
    Numerical { t: f64, what: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Config(_) => 2,
            Error::Numerical { .. } => 3,
            Error::Io(_) | Error::Format(_) => 1,
        }
    }
}

/// One rejected configuration entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
