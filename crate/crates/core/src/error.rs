use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("invalid `{field}`: requires {predicate}")]
    Invariant {
        field: &'static str,
        predicate: String,
    },

    #[error("{0}")]
    Domain(String),

    #[error("time {time} s is not a multiple of the step {dt} s")]
    OffGrid { time: f64, dt: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invariant(field: &'static str, predicate: impl Into<String>) -> Error {
    Error::Invariant {
        field,
        predicate: predicate.into(),
    }
}
