use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code classes:
/// config errors (2), data errors (3), numeric invariant violations (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal too short: {len} samples, window needs {nfft}")]
    TooShortSignal { len: usize, nfft: usize },

    #[error("filter design error: {0}")]
    FilterDesign(String),

    #[error("aliasing: frequency {f0} Hz at or above Nyquist {nyquist} Hz")]
    Aliasing { f0: f64, nyquist: f64 },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("bicoherence normalization violated: |b| = {0}")]
    Normalization(f64),

    #[error("band error: {0}")]
    Band(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl Error {
    /// CLI exit code class for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Normalization(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
