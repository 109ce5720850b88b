use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("grid is missing node {node} required by `{operator}`")]
    MissingNode { operator: String, node: f64 },

    #[error("warp value {value} is {distance:e} away from the nearest grid point (mesh {mesh:e})")]
    SnapExceeded {
        value: f64,
        distance: f64,
        mesh: f64,
    },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("operator `{operator}` does not claim {missing}")]
    MissingClaims { operator: String, missing: String },

    /// `A(1)` is not strictly positive on the target grid.
    #[error("hypothesis A(1) > 0 violated: min A(1) = {min} at target point {index}")]
    Hypothesis { min: f64, index: usize },

    #[error("bound violated at n = {n}: lhs {lhs} > rhs {rhs} + tol {tol}")]
    BoundViolation {
        n: usize,
        lhs: f64,
        rhs: f64,
        tol: f64,
    },

    /// A claimed axiom failed its randomized check.
    #[error("operator `{operator}` violates claimed {property} by {violation:e}")]
    AxiomViolation {
        operator: String,
        property: String,
        violation: f64,
    },

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 1 config/usage, 2 bound or claimed-axiom violation,
    /// 3 `A(1) > 0` failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BoundViolation { .. } | Error::AxiomViolation { .. } => 2,
            Error::Hypothesis { .. } => 3,
            _ => 1,
        }
    }
}
