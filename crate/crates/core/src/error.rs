use std::fmt;

/// Errors raised by setup checks and representation constraints.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid material parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("ansatz {ansatz} cannot be used with winding k = {k}")]
    AnsatzParity { ansatz: &'static str, k: i32 },
    #[error("odd k = {k} frame is discontinuous across phi = 2pi; w3/w4 must vanish ({detail})")]
    Representation { k: i32, detail: String },
    #[error("point {index} is outside the tubular neighbourhood: {detail}")]
    OutOfNeighbourhood { index: usize, detail: String },
    #[error("radius {r} outside cached range [{lo}, {hi}]")]
    CacheMiss { r: f64, lo: f64, hi: f64 },
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("{0}")]
    Solver(String),
}

/// A solver that stopped before meeting its tolerance. The last iterate is
/// kept so callers can inspect or restart from it.
#[derive(Debug, Clone)]
pub struct NotConverged<T> {
    pub last: T,
    pub iterations: usize,
    pub gradient: f64,
    pub reason: &'static str,
}

impl<T> fmt::Display for NotConverged<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not converged after {} iterations ({}; scaled gradient {:.3e})", self.iterations, self.reason, self.gradient)
    }
}

impl<T: fmt::Debug> std::error::Error for NotConverged<T> {}
