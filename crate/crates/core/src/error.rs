use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature failed to converge: {0}")]
    NonConvergence(String),

    #[error("probability {prob:e} at arm {arm} is below the floor")]
    DegenerateProbability { arm: usize, prob: f64 },

    #[error("could not bracket the simplex multiplier: {0}")]
    RootBracketFailure(String),

    #[error("alpha = {0} leaves no room for the (1 - alpha) denominator")]
    DegenerateAlpha(f64),

    #[error("dimension {0} is outside the domain of the a_q formula")]
    InvalidDimension(usize),

    #[error("point lies outside the enlarged feasible set (distance {distance:e}, radius {radius:e})")]
    OutOfDomain { distance: f64, radius: f64 },

    #[error("Bregman projection missed tolerance: residual {0:e}")]
    ProjectionFailure(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
