use thiserror::Error;

/// Errors raised by the binary-vector and code model layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("pool count {0} outside supported range 1..=64")]
    PoolCount(usize),
    #[error("pool index {index} outside 1..={m}")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("address {index} has weight {found}, expected {expected}")]
    WeightMismatch {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("invalid weight r={r} for m={m}")]
    InvalidWeight { m: usize, r: usize },
    #[error("ragged incidence matrix: row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("non-binary entry {symbol:?} at row {row}, column {column}")]
    NonBinary {
        row: usize,
        column: usize,
        symbol: String,
    },
    #[error("malformed permutation: {0}")]
    Permutation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Reasons a constructor gives up.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("node budget of {budget} visits exhausted")]
    BudgetExhausted { budget: u64 },
    #[error("time limit exceeded after {visited} node visits")]
    TimeLimit { visited: u64 },
    #[error("requested length {n} exceeds the bound {bound} for (m={m}, r={r})")]
    Infeasible {
        m: usize,
        r: usize,
        n: usize,
        bound: usize,
    },
    #[error("no joining address left after exhausting all alternatives")]
    NoJoiningAddress,
    #[error("search space exhausted without reaching the target length")]
    Exhausted,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

impl ConstructError {
    /// True for failures caused by running out of search effort rather than
    /// by the structure of the instance.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            ConstructError::BudgetExhausted { .. } | ConstructError::TimeLimit { .. }
        )
    }
}

/// Errors from the combination calculus (augmentation, joining, flipping).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombineError {
    #[error("parameter mismatch: {0}")]
    Parameters(String),
    #[error("last address of the first code is not a subset of the first address of the second")]
    NotSubset,
    #[error("joining union coincides with consecutive union {0} of the first code")]
    UnionCollision(usize),
    #[error("closing union is invalid: {0}")]
    InvalidClosingUnion(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Errors from the error-injection study.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("{kind} study allows at most {limit} injected errors, got {max_errors}")]
    TooManyErrors {
        kind: &'static str,
        max_errors: usize,
        limit: usize,
    },
    #[error("code needs at least two items")]
    TooShort,
    #[error("sampled mode needs at least one sample")]
    NoSamples,
}
