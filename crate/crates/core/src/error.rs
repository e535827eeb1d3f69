use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("negative coupling {value} on edge ({i}, {j})")]
    NegativeCoupling { i: usize, j: usize, value: f64 },

    #[error("coupling given on ({i}, {j}), which is not an edge")]
    CouplingOnNonEdge { i: usize, j: usize },

    #[error("no coupling given for edge ({i}, {j})")]
    MissingCoupling { i: usize, j: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state became non-finite at t = {time}")]
    NonFinite { time: f64 },

    #[error("trajectory did not synchronize")]
    NotSynchronized,

    #[error("pair ({k}, {l}) has {common} common neighbours; refusing to enumerate 2^{common} constraints")]
    TooManyCommonNeighbors { k: usize, l: usize, common: usize },

    #[error("pair ({k}, {l}) is farther than two hops apart with unequal frequencies")]
    FarPairUnequalFrequencies { k: usize, l: usize },

    #[error("simplex breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
