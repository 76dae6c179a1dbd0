use std::path::PathBuf;

use crate::labels::Pair;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid subsystem index {0}; expected 1 or 2")]
    InvalidSubsystem(u8),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("invalid setting label {0:?}")]
    InvalidLabel(String),
    #[error("invalid outcome {0}; readings are -1 or +1")]
    InvalidOutcome(i64),
    #[error("hidden-variable domain is not normalized: total weight {0}")]
    NonNormalizedDomain(f64),
    #[error("invalid hidden-variable model: {0}")]
    InvalidModel(String),
    #[error("no shot records")]
    EmptyShots,
    #[error("shot records mix setting pairs {0} and {1}")]
    MixedSettingPairs(Pair, Pair),
    #[error("correlation {0} outside [-1, 1]")]
    CorrelationOutOfRange(f64),
    #[error("correlation {0} is not present")]
    MissingLabel(Pair),
    #[error("facet derivation failed: {0}")]
    FacetDerivation(String),
    #[error("LP membership and facet check disagree: {0}")]
    MembershipDisagreement(String),
    #[error("no pairs")]
    NoPairs,
    #[error("pair {0} has zero records")]
    EmptyPair(Pair),
    #[error("pair {0} appears in more than one shot file")]
    DuplicatePair(Pair),
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {cause}")]
    Io {
        path: PathBuf,
        cause: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }
}
