use thiserror::Error;

/// Errors raised by the coverage engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient points in window: needed {needed}, found {found}")]
    InsufficientPoints { needed: usize, found: usize },

    #[error("shadowing spread is zero; the power law has no density")]
    DegenerateSigma,

    #[error("truncated power law has zero mass below t = {t:e} W")]
    ZeroMass { t: f64 },

    #[error(
        "far-field tail bound {bound:e} exceeds tolerance {tolerance:e} at radius {radius:e} m"
    )]
    TailNotConverged {
        bound: f64,
        tolerance: f64,
        radius: f64,
    },

    #[error("Laplace inversion unstable: {0}")]
    InversionUnstable(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("conditioning bin has {hits} samples, need at least {required}")]
    InsufficientConditionalSamples { hits: usize, required: usize },

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
