use thiserror::Error;

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] rdk_core::Error),
}

impl HarnessError {
    /// Process exit code: 2 for usage and configuration problems, 3 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 3,
            Self::Csv(e) if e.is_io_error() => 3,
            Self::Core(rdk_core::Error::Io(_)) => 3,
            _ => 2,
        }
    }
}
