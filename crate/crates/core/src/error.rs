use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),

    #[error("grid mismatch: expected {expected} nodes, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("invalid sample range: {0}")]
    InvalidRange(String),

    #[error("non-finite coefficient sample at s = {0}")]
    NonFiniteSample(f64),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("state is not projectable onto the Nehari set: {0}")]
    NotProjectable(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("inadmissible lambda: lambda_{component} = {lambda} must stay below {threshold}")]
    InadmissibleLambda {
        component: usize,
        lambda: f64,
        threshold: f64,
    },

    #[error("coefficient hypotheses fail for {0} on the sampled range")]
    HypothesesFail(String),

    #[error("every candidate collapsed to a semi-trivial state")]
    NoFullyNontrivialCandidate,

    #[error("invalid problem parameters: {0}")]
    InvalidParams(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
