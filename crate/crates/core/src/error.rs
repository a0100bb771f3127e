//! Error type shared by every module in the crate.
//!
//! The CLI maps each variant class onto a stable process exit code (see
//! `docs/FORMATS.md`), so variants are grouped by failure category rather
//! than by the module that raises them.

use std::path::PathBuf;

use chrono::NaiveDate;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration cannot carry shape information: coincident landmarks,
    /// zero centroid size, or fewer than m + 1 landmarks.
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    /// Two operands that must agree in dimensions do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input values violate a type invariant (NaN/Inf entries, nonpositive
    /// prices, negative volumes, non-increasing grids, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A caller-supplied parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The thin-plate spline system is numerically singular, which for
    /// planar landmarks means the source points are (near-)collinear.
    #[error("collinear source landmarks: condition estimate {cond:.3e} exceeds 1e12")]
    CollinearLandmarks { cond: f64 },

    /// Two source landmarks closer than 1e-9 x the configuration diameter.
    #[error("duplicate source landmarks {i} and {j}")]
    DuplicateLandmarks { i: usize, j: usize },

    /// An operation that needs at least one observation received none.
    #[error("empty sample")]
    EmptySample,

    /// Curves in a functional sample disagree with the evaluation grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Depth trimming left fewer configurations than the estimator needs.
    #[error("too few survivors after trimming: {survivors} retained, {required} required")]
    TooFewSurvivors { survivors: usize, required: usize },

    /// Not enough dates to populate every analysis window.
    #[error("too few dates: {dates} dates cannot fill {windows} windows of at least {min_per_window}")]
    TooFewDates {
        dates: usize,
        windows: usize,
        min_per_window: usize,
    },

    /// A panel is missing data it must have (no valid records, or a date
    /// set that differs from its peers after rectangularization).
    #[error("incomplete panel: {0}")]
    IncompletePanel(String),

    /// No date survives the cross-panel intersection.
    #[error("empty date intersection across panels")]
    EmptyIntersection,

    /// The same (date, ticker) pair appears twice in the input data.
    #[error(
        "duplicate record for {ticker} on {date}: rows {first_row} and {second_row} ({first_file} / {second_file})"
    )]
    DuplicateRecord {
        ticker: String,
        date: NaiveDate,
        first_file: String,
        first_row: u64,
        second_file: String,
        second_row: u64,
    },

    /// An input file has the wrong header or an unusable structure.
    #[error("schema error in {path}: {message}")]
    SchemaError { path: String, message: String },

    /// A file could not be parsed at all (as opposed to per-row rejects,
    /// which are collected and reported rather than raised).
    #[error("parse error in {path}: {message}")]
    ParseError { path: String, message: String },

    /// A required input file does not exist.
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    /// Any other I/O failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse failure category. The CLI derives its process exit code from
/// this, and the C API derives its status code, so the two stay in step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// A parameter outside its documented domain.
    Usage,
    /// A required input file does not exist.
    NotFound,
    /// Unparsable input or a wrong schema.
    Schema,
    /// Duplicate records in the input data.
    Duplicate,
    /// Panels that cannot be completed (missing data, empty intersection,
    /// too few dates).
    Incomplete,
    /// Values that violate a data invariant, including degenerate
    /// configurations.
    Data,
    /// Unusable source landmarks for interpolation.
    Landmarks,
    /// Trimming removed too much of the sample.
    Survivors,
    /// Any other I/O failure.
    Io,
}

impl Error {
    /// Wraps an I/O error, promoting `NotFound` to the dedicated variant so
    /// the CLI can report it with its own exit code.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// The failure category of this error.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) => ErrorClass::Usage,
            Error::FileNotFound(_) => ErrorClass::NotFound,
            Error::SchemaError { .. } | Error::ParseError { .. } => ErrorClass::Schema,
            Error::DuplicateRecord { .. } => ErrorClass::Duplicate,
            Error::IncompletePanel(_) | Error::EmptyIntersection | Error::TooFewDates { .. } => {
                ErrorClass::Incomplete
            }
            Error::DegenerateConfiguration(_)
            | Error::InvalidData(_)
            | Error::EmptySample
            | Error::GridMismatch(_)
            | Error::DimensionMismatch(_) => ErrorClass::Data,
            Error::CollinearLandmarks { .. } | Error::DuplicateLandmarks { .. } => {
                ErrorClass::Landmarks
            }
            Error::TooFewSurvivors { .. } => ErrorClass::Survivors,
            Error::Io { .. } => ErrorClass::Io,
        }
    }

    /// Stable snake_case name of the variant, used in machine-readable
    /// error reports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Error::DegenerateConfiguration(_) => "degenerate_configuration",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidData(_) => "invalid_data",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::CollinearLandmarks { .. } => "collinear_landmarks",
            Error::DuplicateLandmarks { .. } => "duplicate_landmarks",
            Error::EmptySample => "empty_sample",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::TooFewSurvivors { .. } => "too_few_survivors",
            Error::TooFewDates { .. } => "too_few_dates",
            Error::IncompletePanel(_) => "incomplete_panel",
            Error::EmptyIntersection => "empty_intersection",
            Error::DuplicateRecord { .. } => "duplicate_record",
            Error::SchemaError { .. } => "schema_error",
            Error::ParseError { .. } => "parse_error",
            Error::FileNotFound(_) => "file_not_found",
            Error::Io { .. } => "io",
        }
    }
}
