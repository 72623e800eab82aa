use thiserror::Error;

use crate::eig::EigenPair;
use crate::optimize::IterRecord;


pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    /// Inverse iteration ran out of iterations. The last iterate is kept so
    /// callers can inspect how far it got.
    #[error("eigensolver did not converge in {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Box<EigenPair>,
    },

    #[error("no admissible swap lowers the weighted integral")]
    NoSwapAvailable,

    #[error("{count} feasible assignments exceed the enumeration limit of {limit}")]
    TooManyAssignments { count: u64, limit: u64 },

    #[error("optimization failed at iteration {iteration}: {source}")]
    Optimization {
        iteration: usize,
        #[source]
        source: Box<Error>,
        trace: Vec<IterRecord>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
