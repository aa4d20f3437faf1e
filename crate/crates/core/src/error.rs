use std::path::PathBuf;

/// Error type shared by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("kernel singular at coincident points: {0}")]
    Singularity(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("inversion failed: {0}")]
    InversionFailure(String),
    #[error("wrap-window violation at t = {t}: boundary mass fraction {fraction:.3e}")]
    WrapViolation { t: f64, fraction: f64 },
    #[error("stepping error: {0}")]
    Stepping(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence(_) | Error::InversionFailure(_) | Error::Linalg(_) => 3,
            Error::WrapViolation { .. } => 4,
            Error::Io { .. } => 1,
            _ => 2,
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
