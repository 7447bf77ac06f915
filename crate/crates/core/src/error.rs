use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("pathloss model requires a 3D distance of at least 10 m, got {0:.3} m")]
    DistanceBelowModelFloor(f64),

    #[error("UE height {0} m is below the 1.5 m model floor")]
    HeightBelowModelFloor(f64),

    #[error("layout has no cells")]
    EmptyLayout,

    #[error("sample has {0} per-cell measurements, at least 2 are required")]
    TooFewCells(usize),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("feature `{0}` has zero variance")]
    DegenerateFeature(&'static str),

    #[error("dataset is not standardized")]
    NotStandardized,

    #[error("training set contains a single class ({0})")]
    SingleClass(&'static str),

    #[error("logistic regression diverged (non-finite loss) with learning rate {learning_rate:e}")]
    Diverged { learning_rate: f64 },

    #[error("non-finite input feature")]
    NonFiniteInput,

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("unsupported model format version {found}, expected {expected}")]
    FormatVersion { found: u32, expected: u32 },

    #[error("unknown application `{name}`; known applications: {known}")]
    UnknownApplication { name: String, known: String },

    #[error("no 5G rate entry for {fc_ghz} GHz / {radius_m} m; available: {available}")]
    NoRateEntry { fc_ghz: f64, radius_m: f64, available: String },

    #[error("invalid registry: {0}")]
    InvalidRegistry(String),

    #[error("{path}: line {line}, column `{column}`: {reason}")]
    Parse { path: PathBuf, line: u64, column: String, reason: String },

    #[error("{path}: bad header: {reason}")]
    Header { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }
}
