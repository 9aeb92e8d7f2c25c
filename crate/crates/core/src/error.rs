use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The kernel is unbounded on the diagonal `x = y`.
    #[error("kernel evaluated on its singularity (x = y)")]
    Singularity,

    #[error(
        "quadrature did not reach tolerance: estimate {estimate:e}, error bound {error_bound:e}"
    )]
    Accuracy { estimate: f64, error_bound: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iteration did not converge after {iterations} iterations (last residual {:e})", residuals.last().copied().unwrap_or(f64::NAN))]
    NonConvergence {
        iterations: usize,
        residuals: Vec<f64>,
        last_iterate: Vec<f64>,
    },

    #[error("transfer matrix assembly failed for cell pair ({row}, {col}): {source}")]
    Assembly {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
