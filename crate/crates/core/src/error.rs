use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count n = {n} outside supported range {min}..={max}")]
    QubitCount { n: usize, min: usize, max: usize },

    #[error("bit strings of different widths ({0} vs {1} qubits)")]
    WidthMismatch(usize, usize),

    #[error("bit pattern {bits:#x} does not fit in {n} bits")]
    BitsOutOfRange { bits: u32, n: usize },

    #[error("subset has {got} qubits, balanced bipartitions need {expected}")]
    SubsetSize { got: usize, expected: usize },

    #[error("state norm^2 deviates from 1 by {dev:.3e} (tolerance {tol:.0e})")]
    NormViolation { dev: f64, tol: f64 },

    #[error("non-finite entry in state vector")]
    NonFinite,

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fixed point not converged after {iters} iterations, residual {residual:.3e}")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("symmetric branch unstable: beta_tilde = {0} >= 1 is at or past the critical point")]
    CriticalBeta(f64),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("state file: {0}")]
    StateFormat(String),
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to misuse).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::CriticalBeta(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
