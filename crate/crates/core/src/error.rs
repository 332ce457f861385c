use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// A required column is missing or a column mapping is inconsistent.
    #[error("schema: {0}")]
    Schema(String),

    /// A cell violates a record invariant. `row` is the 1-based data row
    /// (the header is not counted).
    #[error("validation: row {row}, column {column}: {reason}")]
    Validation {
        row: usize,
        column: String,
        reason: String,
    },

    /// An operation was called with inputs outside its preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("graph: {0}")]
    Graph(String),

    #[error("overlap violation: {0}")]
    Overlap(String),

    #[error("unseen stratum {0}; trim or re-bin before predicting")]
    UnseenStratum(String),

    #[error("zero untreated mean outcome in stratum {0}")]
    ZeroDenominator(String),

    #[error(
        "logistic fit did not converge after {iterations} iterations; \
         try a larger ridge (the data are likely separable)"
    )]
    NonConvergence { iterations: usize },

    #[error("power iteration did not converge after {iterations} iterations")]
    PowerIteration { iterations: usize },

    #[error("bootstrap: {failed} of {total} replicates failed (first failure: {reason})")]
    Bootstrap {
        failed: usize,
        total: usize,
        reason: String,
    },
}

impl Error {
    /// True for failures of the estimation procedure itself (as opposed to
    /// malformed inputs). The CLI maps these to a distinct exit status.
    pub fn is_estimation(&self) -> bool {
        matches!(
            self,
            Error::Overlap(_)
                | Error::UnseenStratum(_)
                | Error::ZeroDenominator(_)
                | Error::NonConvergence { .. }
                | Error::PowerIteration { .. }
                | Error::Bootstrap { .. }
        )
    }

    /// Short machine-parsable category tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Schema(_) => "schema",
            Error::Validation { .. } => "validation",
            Error::InvalidInput(_) => "invalid-input",
            Error::Graph(_) => "graph",
            Error::Overlap(_) => "overlap",
            Error::UnseenStratum(_) => "unseen-stratum",
            Error::ZeroDenominator(_) => "zero-denominator",
            Error::NonConvergence { .. } => "non-convergence",
            Error::PowerIteration { .. } => "power-iteration",
            Error::Bootstrap { .. } => "bootstrap",
        }
    }
}
