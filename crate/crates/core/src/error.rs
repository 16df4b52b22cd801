use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to
/// explain the rejected input without a backtrace.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid alphabet size {0}: need at least 2 symbols")]
    InvalidAlphabet(usize),

    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),

    #[error("degenerate alternative: floor(m(1-eps)) = 0 for m={m}, eps={eps}")]
    DegenerateAlternative { m: usize, eps: f64 },

    #[error("invalid subset: expected {expected} distinct symbols below {m}, got {got:?}")]
    InvalidSubset {
        expected: usize,
        m: usize,
        got: Vec<usize>,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("q is not absolutely continuous w.r.t. p: q[{symbol}] = {mass} where p is zero")]
    AbsoluteContinuity { symbol: usize, mass: f64 },

    #[error("function evaluation returned {value} at x = {x}")]
    Evaluation { x: f64, value: f64 },

    #[error("invalid eps {0}: must lie in (0, 1)")]
    InvalidEps(f64),

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("invalid kappa {0}: must be at least 1")]
    InvalidKappa(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("statistic needs per-symbol counts: {0}")]
    NeedsCounts(String),

    #[error("cannot take log of a zero probability estimate (row {row})")]
    ZeroEstimate { row: usize },

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("oracle too large: {cells} DP cells exceeds budget {budget}")]
    OracleTooLarge { cells: u128, budget: u128 },

    #[error("statistic is not integer-valued after scaling: {0}")]
    Scaling(String),

    #[error("no feasible grid point with tv distance >= {eps} at mesh {mesh}")]
    Infeasible { eps: f64, mesh: usize },

    #[error("observation {0} outside the range of the quantile function")]
    Domain(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
