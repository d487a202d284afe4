use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(String),

    #[error("a prime set needs at least one prime")]
    EmptyPrimeSet,

    #[error("prime {0} listed more than once")]
    DuplicatePrime(u64),

    #[error("rank must be at least {min}, got {rank}")]
    RankTooSmall { rank: usize, min: usize },

    #[error("no one-prime solutions exist: {p} - 1 does not divide {rank} - 1")]
    NotAdmissible { p: u64, rank: usize },

    #[error("rank {rank} exceeds the tractable limit {limit} (use force to override)")]
    Intractable { rank: usize, limit: usize },

    #[error("not a solution: {0}")]
    InvalidSolution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate fit input: {0}")]
    DegenerateFit(String),

    #[error("computation budget exhausted")]
    BudgetExhausted,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
