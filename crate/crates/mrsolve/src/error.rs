use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("iteration limit reached: {0}")]
    IterationLimit(String),
    #[error("invariant `{name}` violated: {detail}")]
    Invariant { name: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invariant(name: &'static str, detail: impl Into<String>) -> Error {
    Error::Invariant {
        name,
        detail: detail.into(),
    }
}
