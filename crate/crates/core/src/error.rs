use thiserror::Error;

/// Errors produced while building graphs, kernels, or solving the
/// transport and curvature programs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("negative weight {weight} on arc {src} -> {dst}")]
    NegativeWeight { src: usize, dst: usize, weight: f64 },

    #[error("arc {0} -> {1} given more than once")]
    DuplicateArc(usize, usize),

    #[error("graph is not strongly connected ({components} strongly connected components)")]
    NotStronglyConnected { components: usize },

    #[error("vertex {0} has no outgoing arcs")]
    ZeroOutDegree(usize),

    #[error("operation requires two distinct vertices, got {0} twice")]
    SameVertex(usize),

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular linear system while computing the stationary measure")]
    SingularSystem,

    #[error("subset must be non-empty")]
    EmptySubset,

    #[error("marginals are not probability vectors (masses {mass0} and {mass1})")]
    MarginalMismatch { mass0: f64, mass1: f64 },

    #[error("smoothing parameter {0} outside [0, 1]")]
    EpsOutOfRange(f64),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("symmetrized kernel is not symmetric (residual {0:e})")]
    NonSymmetricResidual(f64),

    #[error("heat kernel entry {0:e} is too negative to clamp")]
    NegativeHeatKernel(f64),

    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),

    #[error("function is not 1-Lipschitz (Lipschitz constant {0})")]
    NotLipschitz(f64),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("numerical failure in simplex: {0}")]
    Numerics(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
