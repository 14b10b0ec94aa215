use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty edge list")]
    EmptyGraph,

    #[error("invalid vertex id {0}: vertex ids must be positive integers")]
    InvalidVertex(i64),

    #[error("self-loop on vertex {0}")]
    SelfLoop(u64),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u64, u64),

    #[error("unknown edge ({0}, {1})")]
    UnknownEdge(u64, u64),

    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("edge index {index} out of range for {m} edges")]
    EdgeIndexOutOfRange { index: usize, m: usize },

    #[error("edge index {0} listed more than once")]
    DuplicateLabel(usize),

    #[error("inconsistent duplicate flow records for edge ({i}, {j}): {first} vs {second}")]
    InconsistentFlow {
        i: u64,
        j: u64,
        first: f64,
        second: f64,
    },

    #[error("matrix is not antisymmetric on the edge set (max violation {max_violation:e})")]
    NotAntisymmetric { max_violation: f64 },

    #[error("flow matrix has nonzero entry off the edge set at ({0}, {1})")]
    OffEdgeEntry(usize, usize),

    #[error("connected component {component} has no labeled vertex")]
    UnlabeledComponent { component: usize },

    #[error("graph has no cycles (cycle-space dimension is zero)")]
    NoCycles,

    #[error("zero variance: correlation is undefined")]
    ZeroVariance,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible box: lower bound exceeds upper bound at {0:?}")]
    InfeasibleBox(Vec<usize>),

    #[error("market bid exceeds ask for pairs: {}", .0.join(", "))]
    CrossedMarket(Vec<String>),

    #[error("market error: {0}")]
    Market(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("vertex {0} is not connected to vertex {1}")]
    NotAdjacent(u64, u64),
}

pub type Result<T> = std::result::Result<T, Error>;
