use std::io;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] bbmh_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed input: {reason}")]
    MalformedLine { line: u64, reason: String },
    #[error("line {line}: feature value {value} is not 1")]
    NonBinaryValue { line: u64, value: String },
    #[error("line {line}: index {index} is not greater than the previous index")]
    NonAscendingIndex { line: u64, index: u64 },
    #[error("record {record}: {source}")]
    Record {
        record: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("{file}: {reason}")]
    Format { file: &'static str, reason: String },
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(file: &'static str, reason: impl Into<String>) -> Error {
        Error::Format { file, reason: reason.into() }
    }

    pub(crate) fn at_record(self, record: u64) -> Error {
        match self {
            e @ (Error::Record { .. }
            | Error::MalformedLine { .. }
            | Error::NonBinaryValue { .. }
            | Error::NonAscendingIndex { .. }) => e,
            e => Error::Record { record, source: Box::new(e) },
        }
    }
}
