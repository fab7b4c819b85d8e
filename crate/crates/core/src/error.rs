use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("inner product matrix is not symmetric positive-definite: {0}")]
    NotPositiveDefinite(String),

    #[error("subspaces live in different ambient spaces or inner products")]
    IncompatibleSubspaces,

    #[error("generator {index} is not invertible (|det| = {det:e})")]
    SingularGenerator { index: usize, det: f64 },

    #[error("group closure exceeded cap of {cap} elements")]
    CapExceeded { cap: usize },

    #[error("unsupported built-in group: {0}")]
    UnsupportedGroup(String),

    #[error("unsupported sampling scheme: {0}")]
    UnsupportedScheme(String),

    #[error("unsupported stabilizer: {0}")]
    UnsupportedStabilizer(String),

    #[error("subspace is not invariant under element {index} (residual {residual:e})")]
    NotInvariant { index: usize, residual: f64 },

    #[error("averaging projector is not idempotent: residual {residual:e} > {bound:e}")]
    AveragingResidual { residual: f64, bound: f64 },

    #[error("degenerate averaged inner product (condition number {condition:e})")]
    DegenerateMetric { condition: f64 },

    #[error("point outside the rescaling ball: |x| = {norm} >= {eps}")]
    OutsideBall { norm: f64, eps: f64 },

    #[error("matrix is not orthogonal (residual {residual:e})")]
    NotOrthogonal { residual: f64 },

    #[error("vector has a fixed component of norm {fixed_norm:e}")]
    FixedComponent { fixed_norm: f64 },

    #[error("vector does not lie in the slice (residual {residual:e})")]
    NotInSlice { residual: f64 },

    #[error(
        "no solvable augmented system after {attempts} attempts \
         (best |pivot| = {best_pivot:e})"
    )]
    CertificateExhausted { attempts: usize, best_pivot: f64 },

    #[error("stratum {class} has inconsistent quotient dimensions {first} and {other}")]
    InconsistentStratum {
        class: String,
        first: usize,
        other: usize,
    },

    #[error("config error: {0}")]
    Config(String),
}
