//! Centralized numeric tolerances and default solver parameters.
//!
//! Every threshold used by the library and its verification scans lives
//! here, with a note on where it comes from. No ad-hoc magic numbers in
//! call sites.

/// Hyperboloid constraint |<x,x> + 1| after renormalization.
pub const HYPERBOLOID_NORMALIZATION: f64 = 1e-12;

/// Tangency violation |<v, x>| tolerated on hyperboloid models.
pub const HYPERBOLOID_TANGENCY: f64 = 1e-10;

/// exp/log round trip on closed-form models.
pub const EXP_LOG_ROUNDTRIP: f64 = 1e-9;

/// Geodesic BVP endpoint residual (chart coordinates, sup norm).
///
/// Tighter than strictly needed so that finite differences of
/// BVP-backed distances stay above the solver noise floor.
pub const BVP_ENDPOINT_RESIDUAL: f64 = 1e-12;

/// Maximum Newton steps for the shooting solver.
pub const BVP_MAX_NEWTON: usize = 50;

/// Default fixed RK4 step (arc length) for the conformal surface.
pub const PINCH_ODE_STEP: f64 = 1e-3;

/// Default chart bounds for the conformal surface.
pub const PINCH_CHART_BOUND: f64 = 6.0;

/// Parallel transport norm drift.
pub const TRANSPORT_ISOMETRY: f64 = 1e-10;

/// Tangential component of a Jacobi field is affine in t within this.
pub const JACOBI_TANGENTIAL_AFFINE: f64 = 1e-8;

/// Jacobi BVP endpoint reproduction.
pub const JACOBI_BVP_ENDPOINT: f64 = 1e-8;

/// Closed-form Jacobi fields vs RK4-integrated ones, t <= 10, step 1e-3.
pub const JACOBI_CLOSED_VS_ODE: f64 = 1e-8;

/// Slack allowed in the Rauch pinch envelope checks.
pub const RAUCH_SLACK: f64 = 1e-8;

/// Angle clamp when computing arccos of a normalized inner product.
pub const ANGLE_CLAMP: f64 = 1e-12;

/// Minimal separation d(gamma(s0), eta(r0)) accepted by build_variation.
pub const VARIATION_D_MIN: f64 = 0.5;

/// Convergence of the golden-section distance-to-geodesic minimizer
/// (residual gradient at the argmin).
pub const FOOT_GRADIENT_RESIDUAL: f64 = 1e-8;

/// Power iteration: relative change of the norm estimate between sweeps.
pub const POWER_REL_CHANGE: f64 = 1e-10;

/// Power iteration: eigen-residual relative to the norm estimate.
pub const POWER_RESIDUAL: f64 = 1e-8;

/// Power iteration cap.
pub const POWER_MAX_ITERS: usize = 10_000;

/// Oscillation resolution: N >= OVERSAMPLE * lambda / (2 pi).
pub const OIO_OVERSAMPLE: f64 = 8.0;

/// Matrix deduplication tolerance for group elements (entrywise, up to sign).
pub const MOEBIUS_DEDUP: f64 = 1e-9;

/// det(m) - 1 tolerated for Moebius elements.
pub const MOEBIUS_DET: f64 = 1e-12;

/// Default enumeration radius cap.
pub const ENUMERATION_TAU_MAX: f64 = 20.0;

/// Default element budget for enumeration.
pub const ENUMERATION_BUDGET: usize = 2_000_000;
