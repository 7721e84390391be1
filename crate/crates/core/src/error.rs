use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the geometry kernel, the algorithms and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point violates the manifold invariant: {0}")]
    InvalidPoint(String),
    #[error("tangent vector violates the tangency invariant: {0}")]
    InvalidTangent(String),
    #[error("geodesic of length {length} exceeds the injectivity radius {radius}")]
    BeyondInjectivity { length: f64, radius: f64 },
    #[error("tangent vectors are anchored at different base points")]
    BaseMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid geodesic ball: {0}")]
    InvalidBall(String),
    #[error("shrinkage factor {0} outside [0, 1)")]
    InvalidShrinkage(f64),
    #[error("curvature domain violation: {0}")]
    DomainViolation(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("weight matrix has not been validated: {0}")]
    NotValidated(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("configuration has zero variance")]
    DegenerateConfiguration,
    #[error("consensus step size {0} outside [0, 1]")]
    InvalidStepSize(f64),
    #[error("gradient norm {norm} exceeds 10 L = {limit}")]
    GradientBlowup { norm: f64, limit: f64 },
    #[error("query point at distance {distance} from the center leaves the feasible ball of radius {radius}")]
    InfeasibleQuery { distance: f64, radius: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("configuration rejected ({assumption}): {message}")]
    Config { assumption: String, message: String },
    #[error("round {round}{}: {source}", agent_suffix(*.agent))]
    AtRound {
        round: usize,
        agent: Option<usize>,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

fn agent_suffix(agent: Option<usize>) -> String {
    agent.map(|a| format!(", agent {a}")).unwrap_or_default()
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(assumption: &str, message: impl Into<String>) -> Self {
        Error::Config {
            assumption: assumption.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn at_round(self, round: usize, agent: Option<usize>) -> Self {
        Error::AtRound {
            round,
            agent,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
