use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge (error estimate {estimate:.3e}, {nodes} nodes)")]
    Quadrature { estimate: f64, nodes: usize },

    #[error("x = 0 is outside the domain of {0}")]
    Domain(&'static str),

    #[error("conditional variance sampler stalled at x = {x} after {attempts} proposals")]
    SamplerStall { x: f64, attempts: usize },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("undeclared identifier `{0}`")]
    UndeclaredIdentifier(String),

    #[error("evaluation error at {location}: {message}")]
    Evaluation { location: String, message: String },

    #[error("scale coefficient is not positive at observation {index} (c = {value})")]
    NonPositiveScale { index: usize, value: f64 },

    #[error("model evaluation failed at observation {index}: {message}")]
    ModelViolation { index: usize, message: String },

    #[error("simulation diverged at step {step} (state {state})")]
    Simulation { step: usize, state: f64 },

    #[error("parameter vector lies outside the parameter box")]
    OutOfBounds,

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("MCMC aborted at iteration {iteration}: {source}")]
    Chain {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of a numerical routine rather than bad user input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Quadrature { .. }
            | Error::SamplerStall { .. }
            | Error::Simulation { .. }
            | Error::Singular(_) => true,
            Error::Chain { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
