use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("invalid field `{field}` at node {node}: {reason}")]
    InvalidField {
        field: String,
        node: usize,
        reason: String,
    },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("A0s is not positive definite at node {node} (smallest eigenvalue {eigenvalue:e})")]
    NotElliptic { node: usize, eigenvalue: f64 },
    #[error("form bound for `{0}` does not stabilise under refinement")]
    NotFormBounded(String),
    #[error("beta' = 0 with alpha_s * B' = {0} > 0: the closed-form growth bound does not apply (see the 1-D Neumann counterexample); use declared-coercivity mode")]
    ModeError(f64),
    #[error("p = {0} is not in the interior of the admissibility interval")]
    OutsideInterval(f64),
    #[error("exponent {0} not allowed here")]
    BadExponent(f64),
    #[error("weight is not positive at node {0}")]
    BadWeight(usize),
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("linear solver breakdown: {0}")]
    LinAlg(String),
    #[error("resolvent hypothesis fails on probe {probe}: U(v) = {lhs:e} > Re<Lu, w> = {rhs:e}")]
    HypothesisUnmet { probe: usize, lhs: f64, rhs: f64 },
    #[error("bad parameter: {0}")]
    BadParameter(String),
}
