use thiserror::Error;

/// Errors raised across the design, equalization, and simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("PAPR undefined for LED {led}: zero mean intensity")]
    UndefinedPapr { led: usize },

    #[error("invalid pair ({p}, {q}): need 1 <= p < q <= {n}")]
    InvalidPair { p: usize, q: usize, n: usize },

    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),

    #[error("assembly bug: {0}")]
    AssemblyBug(String),

    #[error("unsupported channel model: {0}")]
    UnsupportedModel(String),

    #[error("degenerate channel: all singular values are zero")]
    DegenerateChannel,

    #[error("singular channel: matrix is rank deficient")]
    SingularChannel,

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
