use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point {0} lies outside the support")]
    OutsideSupport(f64),
    #[error("point {0} is an atom; read its mass from the atom list")]
    AtAtom(f64),
    #[error("virtual value is singular at {0} (zero density inside the support)")]
    Singular(f64),
    #[error("distribution is not proper: {0}")]
    Improper(String),
    #[error("quadrature did not converge on [{lo}, {hi}]: estimate {value}, error {error}")]
    Quadrature { lo: f64, hi: f64, value: f64, error: f64 },
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("linear program: {0}")]
    Lp(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
