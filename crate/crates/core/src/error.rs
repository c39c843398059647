use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid direction: zero-length or non-finite vector")]
    InvalidDirection,

    #[error("points coincide; no viewing direction")]
    CoincidentPoints,

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("unknown surface `{0}`")]
    UnknownSurface(String),

    #[error("unknown key object `{0}`")]
    UnknownKeyObject(String),

    #[error("placement ({r}, {c}) outside the {width}x{height} grid of surface `{surface}`")]
    PlacementOutOfBounds {
        surface: String,
        r: usize,
        c: usize,
        width: usize,
        height: usize,
    },

    #[error("frame timestamp {got} does not follow previous timestamp {previous}")]
    OutOfOrderFrame { previous: f64, got: f64 },

    #[error("frame window is empty")]
    EmptyWindow,

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("dimension mismatch for surface `{surface}`: {detail}")]
    DimensionMismatch { surface: String, detail: String },

    #[error("cost component `{name}` is negative or non-finite: {value}")]
    InvalidCostComponent { name: &'static str, value: f64 },

    #[error("search space of {cells} cells exceeds the exhaustive bound of {bound}; raise the bound explicitly")]
    SearchSpaceTooLarge { cells: usize, bound: usize },

    #[error("key object `{0}` has no anchoring surfaces")]
    EmptyKeyObject(String),

    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),

    #[error("step index {index} out of range ({len} steps)")]
    StepOutOfRange { index: usize, len: usize },

    #[error("steps {first} and {second} are not adjacent")]
    NonAdjacentMerge { first: usize, second: usize },

    #[error("invalid split of step {index}: {reason}")]
    InvalidSplit { index: usize, reason: String },

    #[error("step {index} has no key object")]
    UntaggedStep { index: usize },

    #[error("steps without a key object: {0:?}")]
    UntaggedSteps(Vec<usize>),

    #[error("vocabulary phrase `{phrase}` maps to both `{first}` and `{second}`")]
    VocabularyCollision {
        phrase: String,
        first: String,
        second: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    TraceLine {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable tag, used by the HTTP layer.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDirection => "invalid_direction",
            Error::CoincidentPoints => "coincident_points",
            Error::Schema { .. } => "schema",
            Error::UnknownSurface(_) => "unknown_surface",
            Error::UnknownKeyObject(_) => "unknown_key_object",
            Error::PlacementOutOfBounds { .. } => "placement_out_of_bounds",
            Error::OutOfOrderFrame { .. } => "out_of_order_frame",
            Error::EmptyWindow => "empty_window",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidCostComponent { .. } => "invalid_cost_component",
            Error::SearchSpaceTooLarge { .. } => "search_space_too_large",
            Error::EmptyKeyObject(_) => "empty_key_object",
            Error::InvalidConfig(_) => "invalid_config",
            Error::StepOutOfRange { .. } => "step_out_of_range",
            Error::NonAdjacentMerge { .. } => "non_adjacent_merge",
            Error::InvalidSplit { .. } => "invalid_split",
            Error::UntaggedStep { .. } => "untagged_step",
            Error::UntaggedSteps(_) => "untagged_steps",
            Error::VocabularyCollision { .. } => "vocabulary_collision",
            Error::Io { .. } => "io",
            Error::TraceLine { .. } => "trace_line",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
