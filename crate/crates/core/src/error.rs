use thiserror::Error;

/// Errors produced by the continued-fraction and geodesic-flow machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain of the map: {0}")]
    OutOfDomain(String),

    #[error("point lies in no partition interval: {0}")]
    NoInterval(String),

    #[error("map step undefined at this point: {0}")]
    UndefinedStep(String),

    #[error("code has no convergence guarantee: {0}")]
    NotConvergent(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("endpoint is equivalent to a cusp: {0}")]
    CuspGeodesic(String),

    #[error("point does not lie on the geodesic: {0}")]
    OffGeodesic(String),

    #[error("vertical geodesic: {0}")]
    VerticalGeodesic(String),

    #[error("tracer exceeded its crossing budget: {0}")]
    TracerBudget(String),

    #[error("symbolic and geometric engines disagree: {0}")]
    EngineMismatch(String),

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("singular density point: {0}")]
    Singularity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
