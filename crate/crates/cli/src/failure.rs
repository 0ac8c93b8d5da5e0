use std::fmt;
use std::path::Path;

use vi_core::Error;

/// Failure classes, one exit code each.
///
/// | code | meaning |
/// |------|---------|
/// | 0 | success |
/// | 1 | a checked property was violated |
/// | 2 | configuration or input error |
/// | 3 | iteration limit reached before convergence |
/// | 4 | divergence or failed map evaluation |
/// | 5 | unsupported space, retraction, oracle instance or resource request |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Violation,
    Config,
    IterationLimit,
    Divergence,
    Unsupported,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Violation => 1,
            Kind::Config => 2,
            Kind::IterationLimit => 3,
            Kind::Divergence => 4,
            Kind::Unsupported => 5,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Failure {
            kind,
            message: message.into(),
        }
    }

    /// Prefixes the message with the offending config field.
    pub fn at(mut self, field: &str) -> Self {
        self.message = format!("{field}: {}", self.message);
        self
    }

    pub fn in_file(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::InvalidInput(_)
            | Error::Shape { .. }
            | Error::Configuration(_)
            | Error::Estimation(_) => Kind::Config,
            Error::Evaluation(_) | Error::Divergence { .. } => Kind::Divergence,
            Error::UnsupportedSpace { .. }
            | Error::UnsupportedRetraction(_)
            | Error::UnsupportedOracle(_)
            | Error::Resource(_) => Kind::Unsupported,
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(Kind::Config, e.to_string())
    }
}
