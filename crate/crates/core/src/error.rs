use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular configuration: {0}")]
    Singularity(String),

    #[error("superluminal velocity |v| = {speed} >= c = {c}")]
    Superluminal { speed: f64, c: f64 },

    #[error("no circular orbit at r0 = {r0}: {reason}")]
    NoCircularOrbit { r0: f64, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("orbit through xi = {xi} leaves the centre basin: {reason}")]
    BasinExceeded { xi: f64, reason: String },

    #[error("integration truncated after {steps} steps at t = {t}")]
    Truncated {
        steps: usize,
        t: f64,
        partial: Box<crate::dynamics::Trajectory>,
    },

    #[error("integration failed: {0}")]
    Integration(#[from] crate::ode::OdeError),

    #[error("negative orientation (angular momentum {ell}); reflect the trajectory first")]
    Orientation { ell: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("out of branch: {0}")]
    OutOfBranch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Singularity(_) => "singularity",
            Error::Superluminal { .. } => "superluminal",
            Error::NoCircularOrbit { .. } => "no-circular-orbit",
            Error::Precondition(_) => "precondition",
            Error::Domain(_) => "domain",
            Error::Consistency(_) => "consistency",
            Error::BasinExceeded { .. } => "basin-exceeded",
            Error::Truncated { .. } => "truncated",
            Error::Integration(_) => "integration",
            Error::Orientation { .. } => "orientation",
            Error::InsufficientData(_) => "insufficient-data",
            Error::WrongRegime(_) => "wrong-regime",
            Error::OutOfBranch(_) => "out-of-branch",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
