use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("resolution {given} too small: at least {minimum} required ({reason})")]
    Resolution {
        given: usize,
        minimum: usize,
        reason: String,
    },

    #[error("node at a coordinate singularity: {0}")]
    Singular(String),

    #[error("unsupported degree {degree} for n = {n}: {reason}")]
    Degree {
        degree: usize,
        n: usize,
        reason: String,
    },

    #[error("invalid cutoff {0}: must be at least 1")]
    Cutoff(usize),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("degree overflow: {p} + {q} exceeds dimension {n}")]
    DegreeOverflow { p: usize, q: usize, n: usize },

    #[error("assembly under-resolved: symmetry defect {defect:.3e} exceeds {limit:.1e}")]
    UnderResolved { defect: f64, limit: f64 },

    #[error("inner-product convention violated: min eigenvalue of Q3 is {min_eig:.3e} against ||QB|| = {qb_norm:.3e}")]
    Convention { min_eig: f64, qb_norm: f64 },

    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("symmetric eigensolver did not converge on a {size}x{size} problem (residual {residual:.3e})")]
    NonConvergence { size: usize, residual: f64 },

    #[error("kernel is ambiguous (gap ratio {gap_ratio:.3e} < {gap_min:.1e}); raise cutoff or resolution")]
    Ambiguous { gap_ratio: f64, gap_min: f64 },

    #[error("manifold does not have constant curvature")]
    NotConstantCurvature,

    #[error("zero field")]
    ZeroField,

    #[error("input form is not parallel (Rayleigh quotient {0:.3e})")]
    NotParallel(f64),

    #[error("input form is not in the {which} kernel (normalized Rayleigh quotient {quotient:.3e})")]
    NotInKernel { which: &'static str, quotient: f64 },

    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
