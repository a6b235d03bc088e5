use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "codebook with {bits} bits exceeds the search budget of {cap} bits; \
         use a larger cluster size or fewer feedback bits"
    )]
    CodebookBudget { bits: u32, cap: u32 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sweep failed at {axis}={value}: {source}")]
    SweepRow {
        axis: String,
        value: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
