//! Experiment runner for the stochastic heat equation laboratory.
//!
//! The library half of the `shelab` binary: experiment configuration
//! ([`config`]), execution and artifact emission ([`exec`]). Everything is
//! driven by a single TOML file describing one experiment; a run writes a
//! private directory of CSV artifacts plus `summary.txt` and `manifest.txt`,
//! every file stamped with the configuration hash so results stay traceable
//! to the exact inputs that produced them.

pub mod checkpoint;
pub mod config;
pub mod exec;

use std::path::PathBuf;

/// Process-level failure classification; the binary maps these to exit
/// codes (validation 2, numerical 3, I/O 1).
#[derive(Debug)]
pub enum HarnessError {
    /// Anything the core library rejected or failed on.
    Core(shelab_core::Error),
    /// The config file did not parse.
    Parse { path: PathBuf, message: String },
    /// Filesystem trouble reading configs or writing artifacts.
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Core(e) => write!(f, "{e}"),
            HarnessError::Parse { path, message } => {
                write!(f, "failed to parse {}: {message}", path.display())
            }
            HarnessError::Io { context, source } => write!(f, "{context}: {source}"),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Core(e) => Some(e),
            HarnessError::Io { source, .. } => Some(source),
            HarnessError::Parse { .. } => None,
        }
    }
}

impl From<shelab_core::Error> for HarnessError {
    fn from(e: shelab_core::Error) -> Self {
        HarnessError::Core(e)
    }
}

impl HarnessError {
    /// validation | numerical | io
    pub fn category(&self) -> &'static str {
        match self {
            HarnessError::Core(e) if e.is_validation() => "validation",
            HarnessError::Core(_) => "numerical",
            HarnessError::Parse { .. } => "validation",
            HarnessError::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.category() {
            "validation" => 2,
            "numerical" => 3,
            _ => 1,
        }
    }

    /// One-line JSON record for scripted consumers, printed to stderr on
    /// failure.
    pub fn machine_record(&self) -> String {
        serde_json::json!({
            "error": {
                "category": self.category(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

/// Shorthand for mapping `std::io::Error` into a contextual [`HarnessError`].
pub fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let context = context.into();
    move |source| HarnessError::Io { context, source }
}
