use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// A configuration that does not parse or violates an invariant; `line`
    /// is 1-based when known.
    #[error("CONFIG_INVALID: {field}{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    ConfigInvalid { field: String, line: Option<usize>, message: String },
    #[error(transparent)]
    Core(#[from] inflab_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
}

pub type LabResult<T> = Result<T, LabError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> LabError {
    let path = path.into();
    move |source| LabError::Io { path, source }
}
