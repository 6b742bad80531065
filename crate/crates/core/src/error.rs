use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("argument outside the domain of `{op}`: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("`{op}` requires a recurrent kernel (sigma_k = 1)")]
    NotRecurrent { op: &'static str },

    #[error("system size {size} exceeds the cached kernel horizon n_max = {n_max}")]
    SizeExceedsKernel { size: usize, n_max: usize },

    #[error("brute-force enumeration refused for N = {size} (limit {limit})")]
    EnumerationTooLarge { size: usize, limit: usize },

    #[error("root bracket [{lo:e}, {hi:e}] did not converge for `{op}`")]
    RootBracket { op: &'static str, lo: f64, hi: f64 },

    #[error("target free energy {target:e} is not reachable in double precision")]
    Unreachable { target: f64 },

    #[error("overflow in `{op}`: log-value is {log_value}; use the log accessor")]
    Overflow { op: &'static str, log_value: f64 },

    #[error("gap probabilities at residual size {residual} sum to {total} instead of 1")]
    Consistency { residual: usize, total: f64 },

    #[error("height cutoff {cutoff} too small: doubling moved mass {moved:e}")]
    CutoffTooSmall { cutoff: usize, moved: f64 },

    #[error("wetting cross-check disagreement {difference:e} (height {height}, renewal {renewal})")]
    CrossCheck {
        height: f64,
        renewal: f64,
        difference: f64,
    },

    #[error("empty input to `{op}`")]
    Empty { op: &'static str },
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
