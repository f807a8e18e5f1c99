use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration keys.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] figura_core::Error),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Startup(#[from] figura_service::StartupError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(figura_core::Error::InvalidParameter(_)) => 1,
            _ => 2,
        }
    }

    pub fn file(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::File {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Adds the file name to errors raised while parsing its content.
    pub fn within(path: &Path) -> impl FnOnce(figura_core::Error) -> CliError + '_ {
        move |e| match e {
            figura_core::Error::Load { .. } | figura_core::Error::EmptyInput(_) => {
                CliError::Core(figura_core::Error::Data(format!("{}: {e}", path.display())))
            }
            other => CliError::Core(other),
        }
    }
}
