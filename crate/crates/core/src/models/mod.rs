//! Model manifolds: hyperbolic plane H2 and space H3 (hyperboloid model),
//! Euclidean plane E2, and a pinched-curvature conformal surface S_pinch.
//!
//! H2/H3 points live on the upper sheet of <x,x> = -1 in Minkowski space
//! R^{2,1} resp. R^{3,1}; E2 and S_pinch use plane chart coordinates.
//! S_pinch is the metric e^{2u}(dx^2 + dy^2) with u = (x^2+y^2)/4, whose
//! Gauss curvature -e^{-(x^2+y^2)/2} sweeps [-1, 0): complete, simply
//! connected, Cartan-Hadamard.
//!
//! Every operation is a pure function of its inputs; all values are cheap
//! to clone and safe to share across threads.

mod euclid;
mod minkowski;
pub(crate) mod pinch;

pub use pinch::Shooter as PinchShooter;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ode::DenseTraj;
use crate::tol;

/// Which model manifold an object belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ModelId {
    H2,
    H3,
    E2,
    SPinch,
}

impl ModelId {
    /// Number of ambient coordinates a point carries.
    pub fn ambient_dim(self) -> usize {
        match self {
            ModelId::H2 => 3,
            ModelId::H3 => 4,
            ModelId::E2 | ModelId::SPinch => 2,
        }
    }

    /// Manifold dimension.
    pub fn dim(self) -> usize {
        match self {
            ModelId::H3 => 3,
            _ => 2,
        }
    }

    pub fn is_hyperboloid(self) -> bool {
        matches!(self, ModelId::H2 | ModelId::H3)
    }

    /// Parse the names accepted by configs and CLI flags.
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h2" => Ok(ModelId::H2),
            "h3" => Ok(ModelId::H3),
            "e2" => Ok(ModelId::E2),
            "s_pinch" | "spinch" | "pinch" => Ok(ModelId::SPinch),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

/// Solver parameters for the conformal surface (the only model that needs
/// numeric integration). Exposed through the CLI config file.
#[derive(Debug, Clone, Copy)]
pub struct PinchParams {
    /// Fixed RK4 step in arc length.
    pub step: f64,
    /// Chart bounds: points outside [-b, b]^2 are a reported error.
    pub chart_bound: f64,
    /// Endpoint residual (sup norm, chart coordinates) for the geodesic BVP.
    pub bvp_tol: f64,
    /// Newton step cap for the shooting solver.
    pub bvp_max_newton: usize,
}

impl Default for PinchParams {
    fn default() -> Self {
        PinchParams {
            step: tol::PINCH_ODE_STEP,
            chart_bound: tol::PINCH_CHART_BOUND,
            bvp_tol: tol::BVP_ENDPOINT_RESIDUAL,
            bvp_max_newton: tol::BVP_MAX_NEWTON,
        }
    }
}

/// A point of one of the model manifolds.
///
/// Coordinates are stored in a fixed-size array; only the first
/// `model.ambient_dim()` entries are meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub model: ModelId,
    coords: [f64; 4],
}

/// A tangent vector with its base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVec {
    pub base: Point,
    vec: [f64; 4],
}

impl Point {
    /// Build a point from raw coordinates, validating model invariants
    /// (hyperboloid points are renormalized onto the sheet first).
    pub fn new(model: ModelId, coords: &[f64]) -> Result<Point> {
        if coords.len() != model.ambient_dim() {
            return Err(Error::Degenerate(format!(
                "expected {} coordinates for {:?}, got {}",
                model.ambient_dim(),
                model,
                coords.len()
            )));
        }
        let mut c = [0.0; 4];
        c[..coords.len()].copy_from_slice(coords);
        let mut p = Point { model, coords: c };
        if model.is_hyperboloid() {
            minkowski::renormalize(&mut p)?;
        }
        if !p.as_slice().iter().all(|v| v.is_finite()) {
            return Err(Error::Degenerate("non-finite point coordinates".into()));
        }
        Ok(p)
    }

    pub(crate) fn from_array(model: ModelId, coords: [f64; 4]) -> Point {
        Point { model, coords }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.model.ambient_dim()]
    }

    pub(crate) fn array(&self) -> [f64; 4] {
        self.coords
    }

    /// Chart coordinates for the plane models.
    pub fn chart(&self) -> (f64, f64) {
        (self.coords[0], self.coords[1])
    }

    pub fn same_model(&self, other: &Point) -> Result<()> {
        if self.model != other.model {
            return Err(Error::ModelMismatch(self.model, other.model));
        }
        Ok(())
    }
}

impl TangentVec {
    /// Build a tangent vector at `base`, checking hyperboloid tangency.
    pub fn new(base: Point, vec: &[f64]) -> Result<TangentVec> {
        if vec.len() != base.model.ambient_dim() {
            return Err(Error::Degenerate(format!(
                "expected {} components for {:?}, got {}",
                base.model.ambient_dim(),
                base.model,
                vec.len()
            )));
        }
        let mut v = [0.0; 4];
        v[..vec.len()].copy_from_slice(vec);
        let t = TangentVec { base, vec: v };
        if base.model.is_hyperboloid() {
            let viol = minkowski::tangency_violation(&t);
            if viol > tol::HYPERBOLOID_TANGENCY {
                return Err(Error::NotTangent(viol));
            }
        }
        if !t.as_slice().iter().all(|x| x.is_finite()) {
            return Err(Error::Degenerate("non-finite tangent components".into()));
        }
        Ok(t)
    }

    pub(crate) fn from_array(base: Point, vec: [f64; 4]) -> TangentVec {
        TangentVec { base, vec }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vec[..self.base.model.ambient_dim()]
    }

    pub(crate) fn array(&self) -> [f64; 4] {
        self.vec
    }

    pub fn zero(base: Point) -> TangentVec {
        TangentVec { base, vec: [0.0; 4] }
    }

    pub fn norm(&self) -> f64 {
        metric_inner(&self.base, self, self).map(f64::sqrt).unwrap_or(f64::NAN)
    }

    pub fn scale(&self, a: f64) -> TangentVec {
        let mut v = self.vec;
        for x in &mut v {
            *x *= a;
        }
        TangentVec { base: self.base, vec: v }
    }

    pub fn add(&self, other: &TangentVec) -> TangentVec {
        let mut v = self.vec;
        for (x, y) in v.iter_mut().zip(other.vec.iter()) {
            *x += y;
        }
        TangentVec { base: self.base, vec: v }
    }

    pub fn sub(&self, other: &TangentVec) -> TangentVec {
        let mut v = self.vec;
        for (x, y) in v.iter_mut().zip(other.vec.iter()) {
            *x -= y;
        }
        TangentVec { base: self.base, vec: v }
    }

    /// Reinterpret the components at a (numerically equal) base point.
    pub fn rebased(&self, base: Point) -> TangentVec {
        TangentVec { base, vec: self.vec }
    }

    /// Normalize to unit metric length.
    pub fn normalized(&self) -> Result<TangentVec> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::Degenerate("cannot normalize zero tangent vector".into()));
        }
        Ok(self.scale(1.0 / n))
    }
}

/// Dense unit-speed trajectory backing an S_pinch geodesic.
#[derive(Debug)]
pub(crate) struct PinchGeo {
    /// State (x, y, vx, vy) of the unit-speed flow over arc in [0, arc_len].
    pub traj: DenseTraj<4>,
}

/// A constant-speed geodesic segment on parameter interval [0, len].
#[derive(Debug, Clone)]
pub struct Geodesic {
    start: Point,
    velocity: TangentVec,
    len: f64,
    speed: f64,
    pinch: Option<Arc<PinchGeo>>,
}

impl Geodesic {
    /// Geodesic with given initial velocity on [0, len].
    pub fn from_velocity(velocity: TangentVec, len: f64) -> Result<Geodesic> {
        Self::from_velocity_with(&PinchParams::default(), velocity, len)
    }

    pub fn from_velocity_with(
        params: &PinchParams,
        velocity: TangentVec,
        len: f64,
    ) -> Result<Geodesic> {
        if !(len > 0.0) {
            return Err(Error::Degenerate(format!("geodesic interval length {len} must be > 0")));
        }
        let speed = velocity.norm();
        if !(speed > 0.0) {
            return Err(Error::Degenerate("geodesic needs a nonzero velocity".into()));
        }
        let start = velocity.base;
        let pinch = if start.model == ModelId::SPinch {
            let unit = velocity.scale(1.0 / speed);
            let traj = pinch::flow(params, &start, &unit, speed * len)?;
            Some(Arc::new(PinchGeo { traj }))
        } else {
            None
        };
        Ok(Geodesic { start, velocity, len, speed, pinch })
    }

    /// Unit-speed geodesic from the base of `dir` over [0, len].
    pub fn unit_from(dir: &TangentVec, len: f64) -> Result<Geodesic> {
        Geodesic::from_velocity(dir.normalized()?, len)
    }

    /// Unit-speed geodesic on [0, len] passing through `p` with direction
    /// `dir` at parameter `t0` (so it starts at the point `t0` behind `p`).
    pub fn through(p: &Point, dir: &TangentVec, t0: f64, len: f64) -> Result<Geodesic> {
        Self::through_with(&PinchParams::default(), p, dir, t0, len)
    }

    pub fn through_with(
        params: &PinchParams,
        p: &Point,
        dir: &TangentVec,
        t0: f64,
        len: f64,
    ) -> Result<Geodesic> {
        let unit = dir.normalized()?;
        debug_assert!(unit.base == *p);
        if t0 == 0.0 {
            return Geodesic::from_velocity_with(params, unit, len);
        }
        // Flow backward to the start point, then forward.
        let seg = Geodesic::from_velocity_with(params, unit.scale(-1.0), t0)?;
        let back = seg.point_at(t0)?;
        let dir_at_back = seg.velocity_at(t0)?.scale(-1.0);
        let dir_at_back = TangentVec::from_array(back, dir_at_back.array());
        Geodesic::from_velocity_with(params, dir_at_back, len)
    }

    pub fn model(&self) -> ModelId {
        self.start.model
    }

    pub fn start(&self) -> Point {
        self.start
    }

    pub fn velocity(&self) -> TangentVec {
        self.velocity
    }

    pub fn len(&self) -> f64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    fn check_t(&self, t: f64) -> Result<()> {
        let slack = 1e-9 * (1.0 + self.len);
        if t < -slack || t > self.len + slack {
            return Err(Error::OutsideInterval { t, len: self.len });
        }
        Ok(())
    }

    /// Point at parameter t in [0, len].
    pub fn point_at(&self, t: f64) -> Result<Point> {
        self.check_t(t)?;
        match self.model() {
            ModelId::E2 => Ok(euclid::geo_point(self, t)),
            ModelId::H2 | ModelId::H3 => Ok(minkowski::geo_point(self, t)),
            ModelId::SPinch => {
                let traj = &self.pinch.as_ref().unwrap().traj;
                let s = traj.eval((t * self.speed).clamp(0.0, traj.t_end));
                Ok(Point::from_array(ModelId::SPinch, [s[0], s[1], 0.0, 0.0]))
            }
        }
    }

    /// Velocity at parameter t (a tangent vector of length `speed`).
    pub fn velocity_at(&self, t: f64) -> Result<TangentVec> {
        self.check_t(t)?;
        match self.model() {
            ModelId::E2 => Ok(euclid::geo_velocity(self, t)),
            ModelId::H2 | ModelId::H3 => Ok(minkowski::geo_velocity(self, t)),
            ModelId::SPinch => {
                let traj = &self.pinch.as_ref().unwrap().traj;
                let s = traj.eval((t * self.speed).clamp(0.0, traj.t_end));
                let base = Point::from_array(ModelId::SPinch, [s[0], s[1], 0.0, 0.0]);
                Ok(TangentVec::from_array(
                    base,
                    [s[2] * self.speed, s[3] * self.speed, 0.0, 0.0],
                ))
            }
        }
    }

    /// Unit tangent at parameter t.
    pub fn unit_velocity_at(&self, t: f64) -> Result<TangentVec> {
        Ok(self.velocity_at(t)?.scale(1.0 / self.speed))
    }
}

/// Riemannian inner product of two tangent vectors at `p`.
pub fn metric_inner(p: &Point, x: &TangentVec, y: &TangentVec) -> Result<f64> {
    p.same_model(&x.base)?;
    p.same_model(&y.base)?;
    match p.model {
        ModelId::E2 => Ok(euclid::dot(x.as_slice(), y.as_slice())),
        ModelId::H2 | ModelId::H3 => {
            Ok(minkowski::inner(x.as_slice(), y.as_slice()))
        }
        ModelId::SPinch => Ok(pinch::metric_inner(p, x.as_slice(), y.as_slice())),
    }
}

/// Riemannian distance.
pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    distance_with(&PinchParams::default(), p, q)
}

pub fn distance_with(params: &PinchParams, p: &Point, q: &Point) -> Result<f64> {
    p.same_model(q)?;
    match p.model {
        ModelId::E2 => Ok(euclid::distance(p, q)),
        ModelId::H2 | ModelId::H3 => Ok(minkowski::distance(p, q)),
        ModelId::SPinch => pinch::distance(params, p, q),
    }
}

/// exp_p(t X): point at parameter t of the geodesic with initial velocity X.
pub fn exp_map(p: &Point, x: &TangentVec, t: f64) -> Result<Point> {
    exp_map_with(&PinchParams::default(), p, x, t)
}

pub fn exp_map_with(params: &PinchParams, p: &Point, x: &TangentVec, t: f64) -> Result<Point> {
    p.same_model(&x.base)?;
    match p.model {
        ModelId::E2 => Ok(euclid::exp(p, x, t)),
        ModelId::H2 | ModelId::H3 => Ok(minkowski::exp(p, x, t)),
        ModelId::SPinch => pinch::exp(params, p, x, t),
    }
}

/// Inverse of the exponential map. Closed-form models only; use
/// [`geodesic_connect`] on the conformal surface.
pub fn log_map(p: &Point, q: &Point) -> Result<TangentVec> {
    p.same_model(q)?;
    match p.model {
        ModelId::E2 => Ok(euclid::log(p, q)),
        ModelId::H2 | ModelId::H3 => Ok(minkowski::log(p, q)),
        ModelId::SPinch => Err(Error::UnsupportedModel(
            ModelId::SPinch,
            "log_map has no closed form here; use geodesic_connect",
        )),
    }
}

/// The geodesic from p to q parameterized on [0, L] (speed d(p,q)/L).
pub fn geodesic_connect(p: &Point, q: &Point, l: f64) -> Result<Geodesic> {
    geodesic_connect_with(&PinchParams::default(), p, q, l)
}

pub fn geodesic_connect_with(
    params: &PinchParams,
    p: &Point,
    q: &Point,
    l: f64,
) -> Result<Geodesic> {
    p.same_model(q)?;
    if !(l > 0.0) {
        return Err(Error::Degenerate(format!("interval length {l} must be > 0")));
    }
    match p.model {
        ModelId::SPinch => {
            let v0 = pinch::connect_velocity(params, p, q)?;
            let velocity = TangentVec::from_array(*p, [v0[0] / l, v0[1] / l, 0.0, 0.0]);
            Geodesic::from_velocity_with(params, velocity, l)
        }
        _ => {
            let lg = log_map(p, q)?;
            if !(lg.norm() > 0.0) {
                return Err(Error::Degenerate("geodesic_connect needs p != q".into()));
            }
            Geodesic::from_velocity(lg.scale(1.0 / l), l)
        }
    }
}

/// Parallel transport of X from geo(t0) to geo(t1) along the geodesic.
pub fn parallel_transport(geo: &Geodesic, x: &TangentVec, t0: f64, t1: f64) -> Result<TangentVec> {
    geo.check_t(t0)?;
    geo.check_t(t1)?;
    let base0 = geo.point_at(t0)?;
    base0.same_model(&x.base)?;
    match geo.model() {
        ModelId::E2 => {
            let base1 = geo.point_at(t1)?;
            Ok(TangentVec::from_array(base1, x.array()))
        }
        ModelId::H2 | ModelId::H3 => minkowski::transport(geo, x, t0, t1),
        ModelId::SPinch => pinch::transport(geo, x, t0, t1),
    }
}

/// Riemann curvature endomorphism R(X, Y) Z at p.
///
/// Sign convention: for orthonormal X, Y the sectional curvature is
/// <R(X,Y)Y, X>, equal to -1 on H2/H3 and 0 on E2.
pub fn curvature_op(p: &Point, x: &TangentVec, y: &TangentVec, z: &TangentVec) -> Result<TangentVec> {
    p.same_model(&x.base)?;
    p.same_model(&y.base)?;
    p.same_model(&z.base)?;
    match p.model {
        ModelId::E2 => Ok(TangentVec::zero(*p)),
        ModelId::H2 | ModelId::H3 => {
            // Constant curvature K = -1: R(X,Y)Z = K(<Y,Z>X - <X,Z>Y).
            let yz = minkowski::inner(y.as_slice(), z.as_slice());
            let xz = minkowski::inner(x.as_slice(), z.as_slice());
            Ok(x.scale(-yz).add(&y.scale(xz)))
        }
        ModelId::SPinch => Ok(pinch::curvature_op(p, x, y, z)),
    }
}

/// Gauss (sectional) curvature at p for the 2-D models, and the sectional
/// curvature of the plane spanned by an orthonormal pair on H3 (always -1).
pub fn gauss_curvature(p: &Point) -> f64 {
    match p.model {
        ModelId::E2 => 0.0,
        ModelId::H2 | ModelId::H3 => -1.0,
        ModelId::SPinch => pinch::gauss_curvature(p.chart().0, p.chart().1),
    }
}

/// Gradient of d(., q) at p: the unit tangent at p of the geodesic from q
/// to p. Satisfies exp_map(p, -grad, d(p,q)) = q.
pub fn grad_distance(p: &Point, q: &Point) -> Result<TangentVec> {
    grad_distance_with(&PinchParams::default(), p, q)
}

pub fn grad_distance_with(params: &PinchParams, p: &Point, q: &Point) -> Result<TangentVec> {
    p.same_model(q)?;
    match p.model {
        ModelId::SPinch => {
            let v0 = pinch::connect_velocity(params, p, q)?;
            let v = TangentVec::from_array(*p, [v0[0], v0[1], 0.0, 0.0]);
            let n = v.norm();
            if !(n > 0.0) {
                return Err(Error::Degenerate("grad_distance needs p != q".into()));
            }
            Ok(v.scale(-1.0 / n))
        }
        _ => {
            let lg = log_map(p, q)?;
            let n = lg.norm();
            if !(n > 0.0) {
                return Err(Error::Degenerate("grad_distance needs p != q".into()));
            }
            Ok(lg.scale(-1.0 / n))
        }
    }
}

/// Parallel unit normal along an S_pinch geodesic: in two dimensions the
/// metric rotation of the unit velocity is parallel.
pub fn pinch_unit_normal(base: Point, unit_velocity: &TangentVec) -> TangentVec {
    pinch::unit_normal(base, unit_velocity)
}

impl Geodesic {
    /// Arc-length integration step of the cached S_pinch trajectory.
    pub fn pinch_step(&self) -> Option<f64> {
        self.pinch.as_deref().map(|p| p.traj.h)
    }
}

/// Project an ambient/chart vector onto the tangent space at p.
pub fn tangent_project(p: &Point, ambient: &[f64]) -> TangentVec {
    match p.model {
        ModelId::H2 | ModelId::H3 => minkowski::project(p, ambient),
        _ => {
            let mut v = [0.0; 4];
            v[..ambient.len().min(2)].copy_from_slice(&ambient[..ambient.len().min(2)]);
            TangentVec::from_array(*p, v)
        }
    }
}

/// Deterministic orthonormal basis of the tangent space at p.
///
/// On the hyperboloid models the basis is the image of the origin frame
/// under the boost taking the origin to p:
/// b_i = (e_i + x (x_i / (1 + x_t)), x_i), which is exactly orthonormal
/// and numerically stable at any radius (Gram-Schmidt of projected
/// ambient axes degrades like |x|^2 far from the origin).
pub fn tangent_basis(p: &Point) -> Vec<TangentVec> {
    let n = p.model.dim();
    match p.model {
        ModelId::H2 | ModelId::H3 => {
            let amb = p.model.ambient_dim();
            let x = p.as_slice();
            let xt = x[amb - 1];
            let mut basis = Vec::with_capacity(n);
            for i in 0..amb - 1 {
                let mut v = [0.0; 4];
                for j in 0..amb - 1 {
                    v[j] = x[j] * x[i] / (1.0 + xt);
                }
                v[i] += 1.0;
                v[amb - 1] = x[i];
                basis.push(TangentVec::from_array(*p, v));
            }
            basis
        }
        ModelId::E2 => {
            vec![
                TangentVec::from_array(*p, [1.0, 0.0, 0.0, 0.0]),
                TangentVec::from_array(*p, [0.0, 1.0, 0.0, 0.0]),
            ]
        }
        ModelId::SPinch => {
            // Scale chart axes to unit metric length.
            let (x, y) = p.chart();
            let s = (-(x * x + y * y) / 4.0).exp(); // e^{-u}
            vec![
                TangentVec::from_array(*p, [s, 0.0, 0.0, 0.0]),
                TangentVec::from_array(*p, [0.0, s, 0.0, 0.0]),
            ]
        }
    }
}

/// Orthonormal basis of the orthogonal complement of `u` in the tangent
/// space at p.
pub fn normal_basis_at(p: &Point, u: &TangentVec) -> Vec<TangentVec> {
    crate::jacobi::normal_basis(p, u)
}

/// Angle between tangent vectors at the same base point, with the inner
/// product clamped to [-1, 1] before arccos.
pub fn angle(x: &TangentVec, y: &TangentVec) -> Result<f64> {
    let p = x.base;
    p.same_model(&y.base)?;
    let nx = x.norm();
    let ny = y.norm();
    if !(nx > 0.0 && ny > 0.0) {
        return Err(Error::Degenerate("angle of a zero vector".into()));
    }
    let c = metric_inner(&p, x, y)? / (nx * ny);
    Ok(c.clamp(-1.0, 1.0).acos())
}

#[cfg(test)]
mod tests;
