//! Error type shared by the whole library.

use thiserror::Error;

/// Everything that can go wrong while building graphs, kernels, or running
/// the verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty edge list")]
    EmptyEdgeList,

    #[error("duplicate undirected edge {{{u}, {v}}} (line {line})")]
    DuplicateEdge { u: usize, v: usize, line: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state space estimate {estimate} exceeds cap {cap}")]
    StateSpaceCap { estimate: usize, cap: usize },

    #[error("trajectory enumeration would exceed cap {cap}")]
    TrajectoryCap { cap: usize },

    #[error("state {0} not found in state space")]
    StateNotFound(String),

    #[error("state space is not closed under reversal (state {0})")]
    NotReversalClosed(String),

    #[error("measure is not stationary: max violation {violation} at state {state}")]
    NotStationary { state: String, violation: String },

    #[error("kernel is not reversible w.r.t. the given measure: violation at ({a}, {b})")]
    NotReversible { a: String, b: String },

    #[error("mixture weights must be nonnegative and sum to 1")]
    BadMixtureWeights,

    #[error("path is not in the required path space: {0}")]
    NotAPath(String),

    #[error("degenerate multiplicity: deg({v}) - m = {value} <= 0 at interior index {index}")]
    DegenerateMultiplicity { v: usize, index: usize, value: i64 },

    #[error("backtrack floor is zero: state {state} cannot reach its reversal ({hint})")]
    BacktrackFloorZero { state: String, hint: String },

    #[error("floor p = {p} exceeds min_a P(a, a^r) = {floor}")]
    FloorTooLarge { p: String, floor: String },

    #[error("the target set is not almost surely reached: state {0} cannot reach it")]
    TargetNotReached(String),

    #[error("singular linear system")]
    SingularSystem,

    #[error("no sink-free source-free orientation: vertex {vertex} has degree {degree} < 2")]
    OrientationInfeasible { vertex: usize, degree: usize },

    #[error("cutset {index} does not separate: witness path {witness:?}")]
    CutsetDoesNotSeparate { index: usize, witness: Vec<usize> },

    #[error("cutsets {a} and {b} share edge {edge}")]
    CutsetsNotDisjoint { a: usize, b: usize, edge: usize },

    #[error("walk requires a stuck-free chain, but {0} stuck states exist")]
    StuckStates(usize),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
