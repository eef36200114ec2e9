use std::fmt;

/// Where a parse failure happened. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{message} at {location}")]
    Parse { message: String, location: Location },

    #[error("dimension mismatch in {block}: expected {expected}, found {found}")]
    Dimension {
        block: String,
        expected: String,
        found: String,
    },

    /// A structural invariant (skew symmetry, PSD, compatibility, ...) is violated.
    #[error("structure violation in {what}: defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    Structure {
        what: String,
        defect: f64,
        tolerance: f64,
    },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("singular matrix in {context}{}", step_suffix(*.step))]
    Singular {
        context: String,
        step: Option<usize>,
    },

    #[error("inconsistent initial values in {block}: residual {residual:.3e}")]
    Inconsistent { block: String, residual: f64 },

    #[error("{0}")]
    Numerical(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn step_suffix(step: Option<usize>) -> String {
    match step {
        Some(k) => format!(" at step {k}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn parse(message: impl Into<String>, line: usize, column: usize) -> Self {
        Error::Parse {
            message: message.into(),
            location: Location { line, column },
        }
    }

    pub(crate) fn dim(block: impl Into<String>, expected: impl fmt::Display, found: impl fmt::Display) -> Self {
        Error::Dimension {
            block: block.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io { .. } => 2,
            Error::Dimension { .. } | Error::Structure { .. } | Error::Model(_) | Error::Inconsistent { .. } => 3,
            Error::Singular { .. } | Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
