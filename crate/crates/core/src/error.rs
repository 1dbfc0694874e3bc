use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A day or shift index outside the planning horizon.
    #[error("{what} {value} out of range 1..={max}")]
    Range {
        what: &'static str,
        value: usize,
        max: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("incomplete assignment: {assigned} of {expected} nurses assigned")]
    IncompleteAssignment { assigned: usize, expected: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("inconsistent input: {0}")]
    Consistency(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("learning failed: {0}")]
    Learning(String),
    #[error("domain of 2^{exponent} patterns exceeds the cap of {cap} (enable streaming)")]
    Capacity { exponent: u32, cap: u64 },
    #[error("invalid value: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
