use sharecast_autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{origin}:{line}: {msg}")]
    Parse { origin: String, line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error("{0}")]
    Invalid(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("stale {what} version: found v{found}, this build reads v{expected}")]
    Version { what: &'static str, found: u32, expected: u32 },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error(transparent)]
    Autodiff(#[from] AutodiffError),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl Error {
    pub(crate) fn parse(origin: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { origin: origin.to_string(), line, msg: msg.into() }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &std::path::Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
