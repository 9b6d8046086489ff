use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("feature-resolution error: target edge length {target} exceeds smallest feature {feature}")]
    FeatureResolution { target: f64, feature: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported mesh format version {0} (only 2.2 ASCII is supported)")]
    UnsupportedVersion(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver did not converge after {iterations} iterations (best relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("strong mode mixing: {0}; increase detuning or reduce zero-point phase")]
    StrongMixing(String),

    #[error("straddling regime: {0}")]
    Straddling(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Eigen(_)
                | Error::Fit(_)
                | Error::StrongMixing(_)
                | Error::Straddling(_)
        )
    }
}
