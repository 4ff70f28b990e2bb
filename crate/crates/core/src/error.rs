use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("root iteration failed to converge: worst scaled residual {worst_residual:.3e} after {iterations} iterations")]
    RootNonConvergence { worst_residual: f64, iterations: usize },

    #[error("finite-difference stencil crosses a near-multiplicity (|disc| {disc:.3e} below threshold {threshold:.3e} at node {node})")]
    NearMultiplicity { node: usize, disc: f64, threshold: f64 },

    #[error("branch is on the real axis over the sampled region; no contact order to fit")]
    OnAxisBranch,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("propagator overflow: branch {branch} has Im tau = {im_tau:.3e} < 0 and t = {t} is too large")]
    PropagatorOverflow { branch: usize, im_tau: f64, t: f64 },

    #[error("missing geometry: {0}")]
    MissingGeometry(String),

    #[error("classification inconclusive: {0}")]
    Inconclusive(String),

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
