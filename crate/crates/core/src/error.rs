use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix dimensions must be positive, got {n_rows}x{n_cols}")]
    EmptyDimensions { n_rows: usize, n_cols: usize },

    #[error("entry ({row}, {col}) lies outside the {n_rows}x{n_cols} grid")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("value {value} at ({row}, {col}) is outside [0, 1]")]
    ValueOutOfRange { row: usize, col: usize, value: f64 },

    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("entry ({row}, {col}) has zero support")]
    ZeroSupport { row: usize, col: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no prediction supplied for observed entry ({row}, {col})")]
    MissingPrediction { row: usize, col: usize },

    #[error("sigma {sigma} is below the minimum {min}")]
    SigmaTooSmall { sigma: f64, min: f64 },

    #[error("model is not a valid {kind} model: {reason}")]
    InvalidModel { kind: String, reason: String },

    #[error("training diverged at epoch {epoch} (objective {objective})")]
    Diverged { epoch: usize, objective: f64 },

    #[error(
        "filtering removed every entry (entries before: {entries_before}, \
         after support filter: {after_support}, after item filter: {after_items})"
    )]
    EmptyAfterFilter {
        entries_before: usize,
        after_support: usize,
        after_items: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("fit failed for grid point {index} ({params}): {source}")]
    GridPoint {
        index: usize,
        params: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn non_finite(what: impl Into<String>) -> Self {
        Error::NonFinite(what.into())
    }
}
