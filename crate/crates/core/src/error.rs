use thiserror::Error;

/// Every failure the library can report. The CLI maps each variant to an exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("integral {what} does not converge")]
    NonIntegrable { what: String },

    #[error("parameters violate the admissibility conditions: {integral} is not finite")]
    ThetaViolation { integral: String },

    #[error("gamma must be strictly positive, got {0}")]
    InvalidGamma(f64),

    #[error("jump rate of the {which} component is infinite; raise the truncation threshold")]
    InfiniteRate { which: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no renewal before horizon {horizon}")]
    HorizonExceeded { horizon: f64 },

    #[error("wrong regime: {expected} required, parameters are in {found}")]
    WrongRegime { expected: String, found: String },

    #[error("Laplace exponent undefined at lambda = {lambda}: {reason}")]
    DomainError { lambda: f64, reason: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
