//! varlab: a numerical laboratory for geodesic variation calculus on
//! nonpositively curved model surfaces and spaces.
//!
//! The crate provides:
//!
//! - [`models`]: four model manifolds (hyperbolic plane and 3-space in the
//!   hyperboloid model, the Euclidean plane, and a pinched-curvature conformal
//!   surface) with distance, exp/log maps, geodesic connection, parallel
//!   transport and curvature,
//! - [`jacobi`]: Jacobi field initial-value and boundary-value solvers with
//!   tangential/normal decomposition and Rauch comparison checks,
//! - [`variation`]: the two-parameter variation through geodesics
//!   connecting two geodesic segments, with second and third variation
//!   formulas of the two-point distance evaluated by independent routes,
//! - [`scans`]: batch verification scans (mixed-partial dichotomy, 3-D
//!   coplanarity, near-critical isolation, derivative growth),
//! - [`comparison`]: cone-in-tube containment driven by the Toponogov-type
//!   aperture formula,
//! - [`oscillatory`]: discretized oscillatory integral operators, power
//!   iteration operator norms and decay scans,
//! - [`lattice`]: Schottky group enumeration, tube partitions and dyadic
//!   displacement counts in the hyperbolic plane.
//!
//! All scan entry points are deterministic for a fixed seed regardless of
//! thread count.

pub mod comparison;
pub mod error;
pub mod fd;
pub mod jacobi;
pub mod lattice;
pub mod models;
pub mod ode;
pub mod oscillatory;
pub mod report;
pub mod sampler;
pub mod scans;
pub mod tol;
pub mod variation;

pub use error::{Error, Result};
pub use models::{Geodesic, ModelId, Point, TangentVec};
