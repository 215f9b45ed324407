use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value produced at index {0}")]
    NonFinite(usize),
    #[error("restriction with margin {0} leaves no points")]
    EmptyRestriction(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("exponent relation violated: {0}")]
    ExponentRelation(String),
    #[error("under-resolved: {0}")]
    Resolution(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("support touches the truncation boundary")]
    SupportTouchesBoundary,
    #[error("zero denominator: {0}")]
    ZeroDenominator(String),
    #[error("evaluation paths disagree: relative difference {0:.3e}")]
    CrossCheck(f64),
    #[error("Picard iteration diverged after {} iterations", .rho_history.len())]
    Divergence { rho_history: Vec<f64> },
    #[error("data norm {norm:.3e} exceeds smallness budget {budget:.3e}")]
    Smallness { norm: f64, budget: f64 },
    #[error("missing stored iterates")]
    MissingIterates,
    #[error("config: {0}")]
    Config(String),
    #[error("missing artifacts: {0:?}")]
    MissingArtifacts(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
