use thiserror::Error;

/// Errors raised by the reduction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("expected a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("operator is not Hermitian: relative defect {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("non-semisimple kernel: algebraic multiplicity {algebraic}, geometric {geometric}")]
    NonSemisimpleKernel { algebraic: usize, geometric: usize },

    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error("ill-conditioned split: biorthogonality defect {0:.3e}")]
    IllConditionedSplit(f64),

    #[error("singular resolvent: residual {0:.3e}")]
    SingularResolvent(f64),

    #[error("recursion inconsistency at order {order}: {what} {value:.3e}")]
    RecursionInconsistency {
        order: usize,
        what: &'static str,
        value: f64,
    },

    #[error("regime exceeded: {0}")]
    RegimeExceeded(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("unknown model '{0}'")]
    UnknownModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
