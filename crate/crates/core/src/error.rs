use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symmetric delta requires an even rank, got {0}")]
    OddRank(usize),

    #[error("rank {rank} exceeds the configured maximum {max}")]
    RankTooLarge { rank: usize, max: usize },

    #[error("slot arity mismatch: tensor rank {rank}, slots consume {consumed}")]
    Arity { rank: usize, consumed: usize },

    #[error("eta product bounds {lo} and {hi} differ in parity")]
    EtaParity { lo: i64, hi: i64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series truncation: needs member k~_{needed}, family provides up to k~_{available}")]
    Truncation { needed: usize, available: usize },

    #[error("derivative order {requested} exceeds family limit {limit}")]
    DerivativeOrder { requested: usize, limit: usize },

    #[error("ladder relation fails at s={s}: relative residual {residual:e} at lambda={lambda}")]
    Ladder {
        s: usize,
        lambda: f64,
        residual: f64,
    },

    #[error("kernel does not decay: |F c^3| = {boundary:e} at c = {c}")]
    Decay { c: f64, boundary: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} within {budget} subintervals (error estimate {estimate:e})")]
    Accuracy {
        tolerance: f64,
        estimate: f64,
        budget: usize,
    },

    #[error("invalid parameter: {0}")]
    Param(String),
}

pub type Result<T> = std::result::Result<T, Error>;
