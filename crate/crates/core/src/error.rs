use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("undefined {0}: inputs carry no variance")]
    Undefined(&'static str),

    #[error("context does not match the model it is applied to: {0}")]
    StaleContext(&'static str),

    #[error("degenerate landmarks: {0}")]
    DegenerateLandmarks(&'static str),

    #[error("sequence {sequence} has {len} frames, fewer than the window of {window}")]
    SequenceTooShort {
        sequence: String,
        len: usize,
        window: usize,
    },

    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidArgument(detail.into())
    }
}
