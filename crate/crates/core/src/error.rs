use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("point lies outside the trust region (linearised coupling {0:.3e})")]
    TrustRegion(f64),

    #[error("degenerate expansion point: {0}")]
    Degenerate(String),

    #[error("infeasible input: {0}")]
    Infeasible(String),

    #[error("oracle requires K = M = N_R = 1, got K={k}, M={m}, N_R={n_r}")]
    NotScalar { k: usize, m: usize, n_r: usize },

    #[error("subproblem not solved: {0}")]
    Solver(String),

    #[error("malformed conic program: {0}")]
    Program(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
