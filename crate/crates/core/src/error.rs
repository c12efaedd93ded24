use std::fmt;
use std::path::{Path, PathBuf};

/// All validation problems found in a plan.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct PlanError {
    pub issues: Vec<String>,
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid plan ({} issue(s))", self.issues.len())?;
        for issue in &self.issues {
            write!(f, "\n  - {issue}")?;
        }
        Ok(())
    }
}

/// A trace line that could not be parsed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{source_name}:{line}: {message}")]
pub struct ParseError {
    pub source_name: String,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Trace(#[from] ParseError),
    #[error("utilization {0} outside [0, 1]")]
    Utilization(f64),
    #[error("negative duration {0} s")]
    NegativeDuration(f64),
    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },
    #[error("{0}")]
    Parse(String),
    #[error("empty trace")]
    EmptyTrace,
    #[error("{0}")]
    Segment(String),
    #[error("{0}")]
    Calibration(String),
    #[error("{0}")]
    Report(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn unknown(kind: &'static str, id: impl Into<String>) -> Self {
        Error::Unknown { kind, id: id.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
