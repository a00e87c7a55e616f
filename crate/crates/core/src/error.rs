use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("duplicate model id `{0}` in metadata")]
    DuplicateModelId(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("models `{0}` and `{1}` are never wrong on the same item")]
    NoJointErrors(String, String),

    #[error("models `{0}` and `{1}` make no errors")]
    NoErrors(String, String),

    #[error("insufficient support for `{a}` vs `{b}`: {found} common observations, need {needed}")]
    InsufficientSupport {
        a: String,
        b: String,
        found: usize,
        needed: usize,
    },

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("no usable model pairs")]
    NoUsablePairs,

    #[error("design matrix is rank deficient; collinear terms: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("too few observations: {observations} rows for {terms} terms")]
    TooFewObservations { observations: usize, terms: usize },

    #[error("missing rating for model `{model}` on resume `{resume}`, job `{job}`")]
    MissingRatings {
        model: String,
        resume: String,
        job: String,
    },

    #[error("no models are flagged as latest")]
    NoLatestModels,

    #[error("no applicant was matched")]
    NoMatches,

    #[error("match probability for a single application is zero")]
    UndefinedBaseline,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("replicate {index} failed: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than bad usage.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidConfig(_))
    }
}
