use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid density field: {0}")]
    InvalidDensity(String),

    #[error("evaluation at singular point {0:?}")]
    SingularPoint([f64; 3]),

    #[error("point {0:?} lies inside the ball; exterior formula undefined")]
    InteriorPoint([f64; 3]),

    #[error("test field is not divergence free (max |div| = {0:e})")]
    NotDivergenceFree(f64),

    #[error("hard-core process too dense: packing proxy {proxy:.3} >= 0.2")]
    Jamming { proxy: f64 },

    #[error(
        "method of reflections did not converge after {sweeps} sweeps (residuals {history:?})"
    )]
    NotConverged { sweeps: usize, history: Vec<f64> },

    #[error("fixed-point iteration diverges: increment ratio {ratio:.3}")]
    Diverged { ratio: f64 },

    #[error("infeasible sweep cell: {0}")]
    Infeasible(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
