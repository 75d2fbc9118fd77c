use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cloud has {nodes} nodes but a star of size {requested} needs at least {needed}")]
    CloudTooSmall {
        nodes: usize,
        requested: usize,
        needed: usize,
    },

    #[error("star size {0} is below the minimum of 5")]
    StarTooSmall(usize),

    #[error("node {0} is not an inner node")]
    NotInner(usize),

    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),

    #[error("degenerate star centered at node {center}: {reason}")]
    DegenerateStar { center: usize, reason: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("motility function {name} is undefined at s = {s}")]
    MotilityDomain { name: String, s: f64 },

    #[error("missing stencil for inner node {0}")]
    MissingStencil(usize),

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("divergence detected at step {step}, node {node} (value {value})")]
    Divergence {
        step: usize,
        node: usize,
        value: f64,
    },

    #[error("time step {dt} violates the convergence bound {bound} (step {step}, node {node})")]
    StabilityViolation {
        dt: f64,
        bound: f64,
        step: usize,
        node: usize,
    },

    #[error(
        "convergence bound breaks down at node {node}: denominator {denominator} is not positive"
    )]
    BoundBreakdown { node: usize, denominator: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("initial condition rejected: {0}")]
    InitialCondition(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
