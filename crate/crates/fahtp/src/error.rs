use thiserror::Error;

/// Library-wide error type. Variants map onto the caller-facing failure
/// classes: bad arguments, degenerate data, and solver failures.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A least-squares support larger than the row count has no unique fit.
    #[error("support size {support_len} exceeds sample size {n}")]
    OverdeterminedSupport { support_len: usize, n: usize },

    /// The selected columns are numerically rank deficient: the smallest
    /// R-diagonal of the QR factorization fell below 1e-10 of the largest.
    #[error("rank-deficient support of size {support_len} (|R| diagonal range {min_diag:.3e}..{max_diag:.3e})")]
    RankDeficient {
        support_len: usize,
        min_diag: f64,
        max_diag: f64,
    },

    /// Column normalization cannot rescale a zero column.
    #[error("column {col} has zero norm")]
    DegenerateColumn { col: usize },

    /// The exhaustive RIP scan refuses instances with too many subsets.
    #[error("C({p}, {s}) exceeds the 1e6 subset budget")]
    SubsetCountTooLarge { p: usize, s: usize },

    /// diagnose needs a recorded trace.
    #[error("run was executed without tracing")]
    NoTrace,

    /// Every model size on the path failed (rank deficiency throughout).
    #[error("no model size on the path could be fitted")]
    Unfittable,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
