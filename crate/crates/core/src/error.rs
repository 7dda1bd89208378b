use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("state space too large for the exact oracle (N = {n})")]
    StateSpaceTooLarge { n: usize },
    #[error("absorbing state: total rate is zero")]
    Absorbed,
    #[error("replica {replica}: event cap {cap} exceeded at micro time {micro_time}")]
    EventCapExceeded { replica: u64, cap: u64, micro_time: f64 },
    #[error("singular system (pivot ratio {pivot_ratio:e})")]
    Singular { pivot_ratio: f64 },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("step size collapsed to {h:e} at t = {t}; try the matrix-exponential path")]
    Stiffness { t: f64, h: f64 },
    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}
