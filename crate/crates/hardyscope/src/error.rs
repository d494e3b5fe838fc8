use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({0}, {1}) is outside the model chart")]
    OutsideChart(f64, f64),

    #[error("point ({0}, {1}) is not in the domain interior")]
    NotInterior(f64, f64),

    #[error("finite-difference stencil too close to the chart boundary at ({0}, {1})")]
    StencilAtChartBoundary(f64, f64),

    #[error("initial velocity is not metric unit speed: |v|_g = {0}")]
    NotUnitSpeed(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain construction failed: {0}")]
    Construction(String),

    #[error("expression error in `{field}`: {message}")]
    Expr { field: String, message: String },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid produced only {0} interior nodes")]
    GridTooCoarse(usize),

    #[error("eigensolver did not converge within the iteration budget (worst residual {worst:.3e})")]
    EigenNotConverged {
        values: Vec<f64>,
        residuals: Vec<f64>,
        worst: f64,
    },

    #[error("invariant check failed: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
