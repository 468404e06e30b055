use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contour clearance violated: {0}")]
    Clearance(String),
    #[error("quadrature did not converge: achieved error estimate {achieved:.3e} (requested {requested:.3e})")]
    Accuracy { achieved: f64, requested: f64 },
    #[error("finite-difference probe leaves the chamber: {0}")]
    Step(String),
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("interval reduction not applicable: {0}")]
    NotReducible(String),
    #[error("meander matrix is singular at kappa = {kappa}")]
    SingularMatrix { kappa: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
