use thiserror::Error;

/// Failure while evaluating a field at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("singular configuration: |{what}| = {value:e} below guard")]
    Singular { what: &'static str, value: f64 },
    #[error("non-finite value (coordinate {coordinate:?})")]
    NonFinite { coordinate: Option<usize> },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("chart domain violation: {0}")]
    ChartDomain(String),
    #[error("map not invertible at the given point")]
    Singular,
    #[error("observable is not quadratic in the momenta (cubic residual {0:e})")]
    NotQuadratic(f64),
    #[error("components are not polynomials of degree <= 2 (fit residual {0:e})")]
    NotPolynomial(f64),
    #[error("no sign of the angular term yields a conserved quantity (residuals {plus:e}, {minus:e})")]
    NoConservedSign { plus: f64, minus: f64 },
    #[error("sampling rejected {rejected} of {drawn} candidate states")]
    Sampling { rejected: usize, drawn: usize },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
