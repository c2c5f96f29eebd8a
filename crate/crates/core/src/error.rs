use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution {0} outside [1, {max}]", max = crate::group::MAX_RESOLUTION)]
    Resolution(u32),

    #[error("{what} = {value} out of range (must be {bound})")]
    OutOfRange {
        what: &'static str,
        value: u64,
        bound: String,
    },

    #[error("index characteristics are undefined for n = 0")]
    ZeroIndex,

    #[error("resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(u32, u32),

    #[error("exponent p = {0} outside its domain")]
    Domain(f64),

    #[error("exact arithmetic unavailable: {0}")]
    NotExact(String),

    #[error("exact arithmetic would overflow 128-bit numerators in {0}")]
    Overflow(&'static str),

    #[error("invalid weight scheme: {0}")]
    Scheme(String),

    #[error("subsequence must be non-empty, positive and strictly increasing")]
    Subsequence,

    #[error("infeasible atom recipe: {0}")]
    Recipe(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn range(what: &'static str, value: impl TryInto<u64>, bound: impl Into<String>) -> Self {
        Error::OutOfRange {
            what,
            value: value.try_into().unwrap_or(u64::MAX),
            bound: bound.into(),
        }
    }
}
