use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate: lat {lat}, lon {lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no shops")]
    NoShops,

    #[error("no assigned shops")]
    NoAssignedShops,

    #[error("count matrix is all zero")]
    EmptyMatrix,

    #[error("degenerate incidence: {0}")]
    DegenerateIncidence(String),

    #[error("ambiguous eigenvector: eigenvalues {0} and {1} coincide")]
    AmbiguousEigenvector(f64, f64),

    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("too few observations: {n_obs} rows for {n_params} parameters")]
    TooFewObservations { n_obs: usize, n_params: usize },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("binary vector must contain both classes")]
    SingleClass,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("duplicate term `{0}`")]
    DuplicateTerm(String),

    #[error("{n_bins} bins requested but only {available} items")]
    TooManyBins { n_bins: usize, available: usize },

    #[error("duplicate shop id `{id}` (row {row})")]
    DuplicateId { id: String, row: usize },

    #[error("unexpected header: expected `{expected}`, found `{found}`")]
    BadHeader { expected: String, found: String },

    #[error("{rejected} of {total} rows rejected (limit 1%)")]
    TooManyRejects { rejected: usize, total: usize },

    #[error("join key mismatch: {unmatched} of {total} {what} rows have no match")]
    JoinMismatch {
        what: &'static str,
        unmatched: usize,
        total: usize,
    },

    #[error("synthetic city too large: {0} shops")]
    TooLarge(usize),

    #[error("malformed {file}: {reason}")]
    Malformed { file: String, reason: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by bad or missing input data rather than by the
    /// computation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidCoordinate { .. }
                | Error::InvalidParameter(_)
                | Error::NoShops
                | Error::MissingColumn(_)
                | Error::DuplicateId { .. }
                | Error::BadHeader { .. }
                | Error::TooManyRejects { .. }
                | Error::JoinMismatch { .. }
                | Error::Malformed { .. }
                | Error::Csv(_)
                | Error::Io { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
