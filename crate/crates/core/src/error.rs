use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integration diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("singular Jacobian (|det| = {det:e}) at state {state:?}")]
    SingularJacobian { det: f64, state: Vec<f64> },

    #[error("dictionary of dimension {dimension} and degree {degree} has {size} terms, above the cap of {cap}")]
    Capacity {
        dimension: usize,
        degree: u32,
        size: u128,
        cap: usize,
    },

    #[error("Gram matrix is numerically rank deficient (eigenvalue ratio {ratio:e}); use a positive regularization")]
    Conditioning { ratio: f64 },

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigenpair selection failed: {0}")]
    Selection(String),

    #[error("region is infeasible to sample: acceptance rate {rate:e} after {proposals} proposals")]
    InfeasibleRegion { rate: f64, proposals: u64 },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("degenerate eigenfunction: all {count} values have magnitude below {floor:e}")]
    DegenerateEigenfunction { count: usize, floor: f64 },

    #[error("phase estimates use different branch centers ({from} vs {to})")]
    BranchMismatch { from: f64, to: f64 },

    #[error("phase constraint over the horizon needs {count} windows, more than the limit of {limit}")]
    HorizonTooLong { count: u64, limit: u64 },

    #[error("error budget undefined: smallest |Re(lambda)| is zero")]
    BudgetUndefined,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown system `{0}` (expected example1, duffing or roessler)")]
    UnknownSystem(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for failures caused by bad user input (files, flags, region or
    /// model definitions) rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidRegion(_)
                | Error::InvalidInput(_)
                | Error::UnknownSystem(_)
                | Error::Io { .. }
                | Error::Json { .. }
                | Error::Csv { .. }
                | Error::Capacity { .. }
        )
    }
}
