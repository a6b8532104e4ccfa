use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A request that exceeds a hard size limit (word size, dense cap).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("sector mismatch: {0}")]
    SectorMismatch(String),

    #[error("invalid filling: {0}")]
    InvalidFilling(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("symmetry labeling failed: {0}")]
    Labeling(String),

    #[error("rank-deficient design matrix: {0}")]
    RankDeficient(String),

    #[error("empty bin: {0}")]
    EmptyBin(String),
}

impl Error {
    /// Whether the failure is numerical (as opposed to bad input or size).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Eigen(_)
                | Error::Labeling(_)
                | Error::RankDeficient(_)
                | Error::NotUnitary { .. }
        )
    }
}
