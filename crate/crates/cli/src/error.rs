use std::fmt;
use std::path::{Path, PathBuf};

/// Failure of one invocation, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad command line (exit 2).
    Usage(String),
    /// A configuration file or value failed validation (exit 3).
    Config { path: Option<PathBuf>, message: String },
    /// Anything that went wrong while running (exit 1).
    Run(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(path: impl AsRef<Path>, message: impl fmt::Display) -> Self {
        CliError::Config {
            path: Some(path.as_ref().to_path_buf()),
            message: message.to_string(),
        }
    }

    pub fn invalid(message: impl fmt::Display) -> Self {
        CliError::Config {
            path: None,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config { .. } => 3,
            CliError::Run(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::Run(_) => "run",
        }
    }

    /// One JSON object on a single line.
    pub fn to_line(&self) -> String {
        let (path, message) = match self {
            CliError::Usage(m) | CliError::Run(m) => (None, m.clone()),
            CliError::Config { path, message } => (path.as_ref().map(|p| p.display().to_string()), message.clone()),
        };
        let mut obj = serde_json::json!({
            "error": self.kind(),
            "code": self.exit_code(),
            "message": message.replace('\n', " "),
        });
        if let Some(p) = path {
            obj["path"] = p.into();
        }
        obj.to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

impl std::error::Error for CliError {}

impl From<mg_core::Error> for CliError {
    fn from(e: mg_core::Error) -> Self {
        match e {
            mg_core::Error::InvalidConfig(m) => CliError::invalid(m),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<mg_emotion::EmotionError> for CliError {
    fn from(e: mg_emotion::EmotionError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}
