use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] nftwash::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(nftwash::Error::Io { .. }) | CliError::Io { .. } => "io",
            CliError::Core(nftwash::Error::Config(_)) | CliError::Config(_) => "config",
            CliError::Core(nftwash::Error::Rules { .. }) => "rules",
            CliError::Core(_) => "data",
            CliError::Parse { .. } => "parse",
            CliError::Stage { source, .. } => source.kind(),
        }
    }

    fn path(&self) -> Option<&Path> {
        match self {
            CliError::Core(nftwash::Error::Io { path, .. })
            | CliError::Io { path, .. }
            | CliError::Parse { path, .. } => Some(path),
            CliError::Stage { source, .. } => source.path(),
            _ => None,
        }
    }

    /// Single-line JSON rendering written to stderr on failure.
    pub fn to_json_line(&self) -> String {
        let (stage, inner) = match self {
            CliError::Stage { stage, source } => (Some(stage.as_str()), source.as_ref()),
            other => (None, other),
        };
        let mut v = json!({
            "error": self.kind(),
            "message": inner.to_string(),
        });
        if let Some(stage) = stage {
            v["stage"] = json!(stage);
        }
        if let Some(path) = self.path() {
            v["path"] = json!(path.display().to_string());
        }
        v.to_string()
    }
}
