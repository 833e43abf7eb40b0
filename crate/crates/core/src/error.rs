use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("zero-length profile edge after layer {0}")]
    ZeroEdge(usize),

    #[error("degenerate band at layer {0}: f(n) = f(n+1) = 0")]
    DegenerateBand(usize),

    #[error("normal seed ({0}, {1}) is not a unit vector")]
    InvalidSeed(f64, f64),

    #[error("polygons have different vertex counts ({0} vs {1})")]
    ShapeMismatch(usize, usize),

    #[error("edge {0} of the two polygons is not parallel (sine {1:e})")]
    NonParallel(usize, f64),

    #[error("parameter outside the domain of the parametrization: {0}")]
    DomainViolation(String),

    #[error("vanishing step denominator after sample {0}")]
    DegenerateStep(usize),

    #[error("invalid sample grid: {0}")]
    InvalidGrid(String),

    #[error("constraint Jacobian is singular (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("division by zero: height difference at layer {0} vanishes")]
    DivisionByZero(usize),

    #[error("integration broke down at t = {time}: {reason}")]
    StepFailure { time: f64, reason: String },

    #[error("state does not satisfy its boundary condition: {0}")]
    Constraint(String),

    #[error("cannot fit constant-curvature profile: {0}")]
    FitDomain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
