use crate::models::ModelId;

/// Crate-wide error type.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("model mismatch: {0:?} vs {1:?}")]
    ModelMismatch(ModelId, ModelId),

    #[error("vector is not tangent at its base point (violation {0:.3e})")]
    NotTangent(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("point outside chart bounds [-{bound}, {bound}]^2: ({x:.3}, {y:.3})")]
    ChartBounds { x: f64, y: f64, bound: f64 },

    #[error("geodesic BVP did not converge: endpoint residual {residual:.3e} after {iters} Newton steps")]
    BvpNoConvergence { residual: f64, iters: usize },

    #[error("parameter {t} outside geodesic interval [0, {len}]")]
    OutsideInterval { t: f64, len: f64 },

    #[error("operation unsupported on model {0:?}: {1}")]
    UnsupportedModel(ModelId, &'static str),

    #[error("singular end-value map in Jacobi BVP (condition estimate {0:.3e})")]
    SingularEndMap(f64),

    #[error("integration step underflow: step {0:.3e}")]
    StepUnderflow(f64),

    #[error("finite-difference noise: Richardson estimates disagree by {disagreement:.2}% for {what}")]
    FdNoise { what: String, disagreement: f64 },

    #[error("grid too coarse: N = {n} < {required} required for lambda = {lambda}")]
    GridTooCoarse { n: usize, required: usize, lambda: f64 },

    #[error("power iteration did not converge: relative residual {0:.3e}")]
    NormNoConvergence(f64),

    #[error("theta_T undefined: sinh(R/2)/sinh(T) = {0:.3} > 1 (T too small for R)")]
    ApertureDomain(f64),

    #[error("ping-pong disks overlap: {0}")]
    DisksOverlap(String),

    #[error("enumeration budget exceeded: {count} elements stored, frontier truncated")]
    EnumerationBudget { count: usize },

    #[error("phase below threshold: min phi = {0:.3} < {1}")]
    PhaseTooSmall(f64, f64),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
