use serde::Serialize;
use thiserror::Error;

/// A single broken invariant, named by the offending item and rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub subject: String,
    pub rule: String,
    pub message: String,
}

impl Violation {
    pub fn new(subject: impl Into<String>, rule: impl Into<String>, message: impl Into<String>) -> Self {
        Self { subject: subject.into(), rule: rule.into(), message: message.into() }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} [{}]: {}", self.subject, self.rule, self.message)
    }
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid channel: {}", list(.0))]
    InvalidChannel(Vec<Violation>),
    #[error("invalid scan config: {}", list(.0))]
    InvalidScan(Vec<Violation>),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("grid too large: {required} bytes required, budget is {budget} bytes")]
    GridTooLarge { required: usize, budget: usize },
    #[error("solver did not converge within {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("ambiguous fingerprint database: {0}")]
    AmbiguousDb(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("digest mismatch: sonogram was produced from channel {found}, supplied channel is {expected}")]
    DigestMismatch { expected: String, found: String },
    #[error("unknown override key `{0}`")]
    UnknownKey(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Violations carried by validation failures, empty otherwise.
    pub fn violations(&self) -> &[Violation] {
        match self {
            Error::InvalidChannel(v) | Error::InvalidScan(v) => v,
            _ => &[],
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
