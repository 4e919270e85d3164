use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("y = {0} m lies outside the road [238, 258)")]
    OutOfRoad(f64),
    #[error("lane index {0} outside 1..=5")]
    BadLane(i64),
    #[error("unknown category {value:?} for column {column}")]
    UnknownCategory { column: String, value: String },
    #[error("could not place vehicle {vehicle} without overlap after {attempts} attempts")]
    PlacementFailure { vehicle: usize, attempts: usize },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("lane change duration must be positive, got {0}")]
    BadDuration(f64),
    #[error("speed {0} km/h outside [0, 120]")]
    BadSpeed(f64),
    #[error("malformed simulation log: {0}")]
    MalformedLog(String),
    #[error("t = {0} s is not on the frame grid")]
    BadInstant(f64),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("column {0} is constant; statistic undefined")]
    DegenerateColumn(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("evaluator failed on subset {subset:?}: {reason}")]
    EvaluatorFailure { subset: Vec<String>, reason: String },
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("schema mismatch: expected header {expected:?}, found {found:?}")]
    SchemaMismatch { expected: String, found: String },
    #[error("referential integrity violated: {0}")]
    Referential(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(row: usize, column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            row,
            column: column.into(),
            message: message.into(),
        }
    }
}
