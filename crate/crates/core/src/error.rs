use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} lies outside its domain ({domain})")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("not ergodic: stationary moments need alpha > 0 and beta > 0 (got alpha={alpha}, beta={beta})")]
    NotErgodic { alpha: f64, beta: f64 },

    #[error("inconclusive divergence pattern: {0}")]
    Inconclusive(String),

    #[error("singular information matrix (condition number {condition:.3e})")]
    SingularInformation { condition: f64 },

    #[error("observed information for {coordinate} is {state}; estimate crystallizes at the hitting time")]
    Crystallize {
        coordinate: &'static str,
        state: &'static str,
    },

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("covariance matrix has infinite entries; the CLT needs alpha > 1 and beta > 1 (got alpha={alpha}, beta={beta})")]
    NonFiniteSigma { alpha: f64, beta: f64 },

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable machine-readable tag, used by the CLI for exit codes and
    /// single-line diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::Quadrature { .. } => "quadrature",
            Error::NotErgodic { .. } => "not_ergodic",
            Error::Inconclusive(_) => "inconclusive",
            Error::SingularInformation { .. } => "singular_information",
            Error::Crystallize { .. } => "crystallize",
            Error::DegeneratePath(_) => "degenerate_path",
            Error::InvalidPath(_) => "invalid_path",
            Error::NonFiniteSigma { .. } => "non_finite_sigma",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}
