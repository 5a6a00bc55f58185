use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dataset must contain at least {min} observations, got {n}")]
    EmptyDataset { n: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, found {found} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("column {column} must contain only 0/1 values (row {row} = {value})")]
    NonBinary {
        column: String,
        row: usize,
        value: f64,
    },

    #[error("non-finite value in column {column} at row {row}")]
    NonFinite { column: String, row: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nonpositive variance in Thompson sampling rule: {0}")]
    NonpositiveVariance(String),

    #[error("duplicate centroids at indices {0} and {1}")]
    DuplicateCentroids(usize, usize),

    #[error("number of beds must be positive, got {0}")]
    NonpositiveBeds(f64),

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("no observation has a nondegenerate propensity score")]
    NoNondegenerateRows,

    #[error("instrument-regressor cross-moment matrix is numerically singular (rcond = {rcond:e})")]
    WeakDesignSingular { rcond: f64 },

    #[error("design matrix is singular (rcond = {rcond:e})")]
    SingularDesign { rcond: f64 },

    #[error("no compliers in the sample")]
    NoCompliers,

    #[error("surrogate sample too small: {n} < {min}")]
    InsufficientSurrogate { n: usize, min: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{failed} of {total} replications failed for {cell}; exceeds the 10% cap")]
    TooManyFailures {
        cell: String,
        failed: usize,
        total: usize,
    },
}

impl Error {
    /// Whether the error comes from a model fit rather than malformed input.
    pub fn is_estimation(&self) -> bool {
        matches!(
            self,
            Error::NoNondegenerateRows
                | Error::WeakDesignSingular { .. }
                | Error::SingularDesign { .. }
                | Error::NoCompliers
                | Error::TooManyFailures { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
