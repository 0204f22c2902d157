//! Jacobi fields along unit-speed geodesics: initial-value and two-point
//! boundary-value solvers, tangential/normal decomposition, the
//! nonhomogeneous equation, and Rauch pinch checks.
//!
//! Fields are represented in a parallel orthonormal frame along the
//! geodesic. The tangential component <X, sigma'> is affine in t for any
//! Jacobi field; each normal component w solves w'' = -K(t) w. On the
//! constant-curvature models this is closed form (cosh/sinh for K = -1,
//! affine for K = 0); on the conformal surface the two scalar basis
//! solutions u (u(0)=1, u'(0)=0) and v (v(0)=0, v'(0)=1) are integrated
//! once with RK4 and every field along the geodesic is a combination of
//! them. In two dimensions the metric rotation of the velocity is itself
//! a parallel unit normal, so no transport integration is needed there.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{
    self, metric_inner, parallel_transport, Geodesic, ModelId, Point, TangentVec,
};
use crate::ode::{self, DenseTraj};

/// Orthonormal basis of the normal space to `u` at `p`.
pub fn normal_basis(p: &Point, u: &TangentVec) -> Vec<TangentVec> {
    let full = models::tangent_basis(p);
    let mut out = Vec::with_capacity(full.len() - 1);
    for cand in full {
        let mut v = cand;
        let a = metric_inner(p, &v, u).unwrap();
        v = v.sub(&u.scale(a));
        for b in &out {
            let c = metric_inner(p, &v, b).unwrap();
            v = v.sub(&b.scale(c));
        }
        let n = v.norm();
        if n > 1e-8 {
            out.push(v.scale(1.0 / n));
        }
        if out.len() == p.model.dim() - 1 {
            break;
        }
    }
    debug_assert_eq!(out.len(), p.model.dim() - 1);
    out
}

/// Parallel orthonormal frame (unit tangent + normal basis) along a
/// unit-speed geodesic, evaluated in closed form at any parameter.
pub(crate) struct Frame {
    geo: Geodesic,
    basis0: Vec<TangentVec>,
}

impl Frame {
    pub fn new(geo: &Geodesic) -> Result<Frame> {
        let u0 = geo.unit_velocity_at(0.0)?;
        let basis0 = match geo.model() {
            ModelId::SPinch => {
                vec![models::pinch_unit_normal(geo.start(), &u0)]
            }
            _ => normal_basis(&geo.start(), &u0),
        };
        Ok(Frame { geo: geo.clone(), basis0 })
    }

    pub fn dim_normal(&self) -> usize {
        self.basis0.len()
    }

    /// (unit tangent, parallel normals) at parameter t.
    pub fn at(&self, t: f64) -> Result<(TangentVec, Vec<TangentVec>)> {
        let u = self.geo.unit_velocity_at(t)?;
        let normals = match self.geo.model() {
            ModelId::E2 => {
                let base = self.geo.point_at(t)?;
                self.basis0
                    .iter()
                    .map(|b| TangentVec::new(base, b.as_slice()).unwrap())
                    .collect()
            }
            ModelId::SPinch => {
                let base = self.geo.point_at(t)?;
                vec![models::pinch_unit_normal(base, &u)]
            }
            _ => self
                .basis0
                .iter()
                .map(|b| parallel_transport(&self.geo, b, 0.0, t))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok((u, normals))
    }

    /// Components (tangential, normals...) of a tangent vector at geo(t).
    pub fn components(&self, t: f64, x: &TangentVec) -> Result<Vec<f64>> {
        let (u, normals) = self.at(t)?;
        let p = self.geo.point_at(t)?;
        let mut out = Vec::with_capacity(1 + normals.len());
        out.push(metric_inner(&p, x, &u)?);
        for n in &normals {
            out.push(metric_inner(&p, x, n)?);
        }
        Ok(out)
    }

    /// Rebuild a tangent vector at geo(t) from frame components.
    pub fn assemble(&self, t: f64, comps: &[f64]) -> Result<TangentVec> {
        let (u, normals) = self.at(t)?;
        let mut v = u.scale(comps[0]);
        for (c, n) in comps[1..].iter().zip(&normals) {
            v = v.add(&n.scale(*c));
        }
        Ok(v)
    }
}

enum Evaluator {
    /// w(t) = w0 cosh t + d0 sinh t (K = -1) or w0 + t d0 (K = 0).
    ConstantCurvature { k: f64 },
    /// Scalar basis solutions of w'' = -K(t) w along the geodesic.
    Pinch { u: Arc<DenseTraj<2>>, v: Arc<DenseTraj<2>> },
}

/// A Jacobi field along a unit-speed geodesic, determined by its initial
/// value and initial covariant derivative.
pub struct JacobiField {
    geo: Geodesic,
    frame: Frame,
    value0: TangentVec,
    deriv0: TangentVec,
    /// Tangential data: <X, sigma'> = a0 + b0 t.
    a0: f64,
    b0: f64,
    /// Normal components of (X0, D0) in the frame.
    x0n: Vec<f64>,
    d0n: Vec<f64>,
    eval: Evaluator,
}

fn require_unit_speed(geo: &Geodesic) -> Result<()> {
    if (geo.speed() - 1.0).abs() > 1e-9 {
        return Err(Error::Degenerate(format!(
            "jacobi solvers need a unit-speed geodesic (speed = {})",
            geo.speed()
        )));
    }
    Ok(())
}

/// The two scalar basis solutions of w'' = -K(t) w on [0, len].
fn pinch_scalar_basis(geo: &Geodesic) -> (DenseTraj<2>, DenseTraj<2>) {
    let h = geo.pinch_step().unwrap_or(crate::tol::PINCH_ODE_STEP);
    let rhs = |t: f64, s: &[f64; 2]| {
        let p = geo.point_at(t.min(geo.len())).unwrap();
        let k = models::gauss_curvature(&p);
        [s[1], -k * s[0]]
    };
    let u = ode::integrate(rhs, [1.0, 0.0], geo.len(), h);
    let v = ode::integrate(rhs, [0.0, 1.0], geo.len(), h);
    (u, v)
}

impl JacobiField {
    /// Field with initial value `x0` and initial covariant derivative `d0`.
    pub fn ivp(geo: &Geodesic, x0: &TangentVec, d0: &TangentVec) -> Result<JacobiField> {
        require_unit_speed(geo)?;
        let frame = Frame::new(geo)?;
        let c0 = frame.components(0.0, x0)?;
        let c1 = frame.components(0.0, d0)?;
        let eval = match geo.model() {
            ModelId::E2 => Evaluator::ConstantCurvature { k: 0.0 },
            ModelId::H2 | ModelId::H3 => Evaluator::ConstantCurvature { k: -1.0 },
            ModelId::SPinch => {
                let (u, v) = pinch_scalar_basis(geo);
                Evaluator::Pinch { u: Arc::new(u), v: Arc::new(v) }
            }
        };
        Ok(JacobiField {
            geo: geo.clone(),
            frame,
            value0: *x0,
            deriv0: *d0,
            a0: c0[0],
            b0: c1[0],
            x0n: c0[1..].to_vec(),
            d0n: c1[1..].to_vec(),
            eval,
        })
    }

    /// Solve the two-point boundary value problem X(0) = x_start,
    /// X(len) = x_end by superposing basis initial-value solutions and
    /// inverting the end-value map (diagonal in the parallel frame).
    pub fn bvp(geo: &Geodesic, x_start: &TangentVec, x_end: &TangentVec) -> Result<JacobiField> {
        require_unit_speed(geo)?;
        let rho = geo.len();
        let frame = Frame::new(geo)?;
        let cs = frame.components(0.0, x_start)?;
        let ce = frame.components(rho, x_end)?;

        // Tangential part is affine: a(0) = cs[0], a(rho) = ce[0].
        let a0 = cs[0];
        let b0 = (ce[0] - cs[0]) / rho;

        // Normal parts: w(rho) = w0 U(rho) + d0 V(rho) with (U, V) the
        // scalar basis solutions; solve for d0.
        let (eval, u_end, v_end) = match geo.model() {
            ModelId::E2 => (Evaluator::ConstantCurvature { k: 0.0 }, 1.0, rho),
            ModelId::H2 | ModelId::H3 => {
                (Evaluator::ConstantCurvature { k: -1.0 }, rho.cosh(), rho.sinh())
            }
            ModelId::SPinch => {
                let (u, v) = pinch_scalar_basis(geo);
                let (ue, ve) = (u.last()[0], v.last()[0]);
                (Evaluator::Pinch { u: Arc::new(u), v: Arc::new(v) }, ue, ve)
            }
        };
        // No conjugate points in K <= 0, so V(rho) >= rho > 0; anything
        // else is an internal error.
        if v_end.abs() < 1e-12 * rho.max(1.0) {
            return Err(Error::SingularEndMap(v_end.abs() / rho.max(1.0)));
        }
        let x0n = cs[1..].to_vec();
        let d0n: Vec<f64> = x0n
            .iter()
            .zip(&ce[1..])
            .map(|(w0, w_end)| (w_end - w0 * u_end) / v_end)
            .collect();

        let mut dcomps = vec![b0];
        dcomps.extend_from_slice(&d0n);
        let deriv0 = frame.assemble(0.0, &dcomps)?;
        Ok(JacobiField {
            geo: geo.clone(),
            frame,
            value0: *x_start,
            deriv0,
            a0,
            b0,
            x0n,
            d0n,
            eval,
        })
    }

    pub fn geodesic(&self) -> &Geodesic {
        &self.geo
    }

    pub fn value0(&self) -> TangentVec {
        self.value0
    }

    /// D_t X at t = 0.
    pub fn deriv0(&self) -> TangentVec {
        self.deriv0
    }

    /// Scalar normal solution and derivative at t for normal index i.
    fn normal_at(&self, i: usize, t: f64) -> (f64, f64) {
        let (w0, d0) = (self.x0n[i], self.d0n[i]);
        match &self.eval {
            Evaluator::ConstantCurvature { k } => {
                if *k == 0.0 {
                    (w0 + t * d0, d0)
                } else {
                    // K = -1: w'' = w.
                    (w0 * t.cosh() + d0 * t.sinh(), w0 * t.sinh() + d0 * t.cosh())
                }
            }
            Evaluator::Pinch { u, v } => {
                let us = u.eval(t);
                let vs = v.eval(t);
                (w0 * us[0] + d0 * vs[0], w0 * us[1] + d0 * vs[1])
            }
        }
    }

    /// (X_t, D_t X_t), both tangent at geodesic(t).
    pub fn eval(&self, t: f64) -> Result<(TangentVec, TangentVec)> {
        let n = self.frame.dim_normal();
        let mut val = vec![self.a0 + t * self.b0];
        let mut der = vec![self.b0];
        for i in 0..n {
            let (w, dw) = self.normal_at(i, t);
            val.push(w);
            der.push(dw);
        }
        Ok((self.frame.assemble(t, &val)?, self.frame.assemble(t, &der)?))
    }
}

/// One-shot initial value solve: (X_t, D_t X_t).
pub fn jacobi_ivp(
    geo: &Geodesic,
    x0: &TangentVec,
    d0: &TangentVec,
    t: f64,
) -> Result<(TangentVec, TangentVec)> {
    if t < -1e-12 || t > geo.len() + 1e-9 * (1.0 + geo.len()) {
        return Err(Error::OutsideInterval { t, len: geo.len() });
    }
    JacobiField::ivp(geo, x0, d0)?.eval(t)
}

/// One-shot boundary value solve.
pub fn jacobi_bvp(geo: &Geodesic, x_start: &TangentVec, x_end: &TangentVec) -> Result<JacobiField> {
    JacobiField::bvp(geo, x_start, x_end)
}

/// Tangential and normal parts of the field at t: X = <X, s'> s' + X_perp.
pub fn normal_decompose(j: &JacobiField, t: f64) -> Result<(TangentVec, TangentVec)> {
    let (x, _) = j.eval(t)?;
    decompose_against(&j.geo, t, &x)
}

/// Decompose an arbitrary tangent vector at geo(t) against the velocity.
pub fn decompose_against(
    geo: &Geodesic,
    t: f64,
    x: &TangentVec,
) -> Result<(TangentVec, TangentVec)> {
    let u = geo.unit_velocity_at(t)?;
    let p = geo.point_at(t)?;
    let a = metric_inner(&p, x, &u)?;
    let tang = u.scale(a);
    Ok((tang, x.sub(&tang)))
}

/// Nonhomogeneous Jacobi equation D_t^2 X + R(X, s') s' + S = 0 with
/// initial data (x0, d0), integrated with RK4 in the parallel frame.
/// With S = 0 this is the independent ODE route against the homogeneous
/// closed forms.
pub fn nonhomog_jacobi_ivp(
    geo: &Geodesic,
    x0: &TangentVec,
    d0: &TangentVec,
    source: &dyn Fn(f64) -> TangentVec,
    t: f64,
    step: f64,
) -> Result<(TangentVec, TangentVec)> {
    require_unit_speed(geo)?;
    if t < 0.0 || t > geo.len() + 1e-9 * (1.0 + geo.len()) {
        return Err(Error::OutsideInterval { t, len: geo.len() });
    }
    if step <= 1e-12 {
        return Err(Error::StepUnderflow(step));
    }
    let frame = Frame::new(geo)?;
    let nd = frame.dim_normal();
    let c0 = frame.components(0.0, x0)?;
    let c1 = frame.components(0.0, d0)?;
    // State: [a, a', w_1, w_1', w_2, w_2'] (up to 2 normal directions).
    let mut y0 = [0.0; 6];
    y0[0] = c0[0];
    y0[1] = c1[0];
    for i in 0..nd {
        y0[2 + 2 * i] = c0[1 + i];
        y0[3 + 2 * i] = c1[1 + i];
    }
    let curvature = |tau: f64| -> f64 {
        match geo.model() {
            ModelId::E2 => 0.0,
            ModelId::H2 | ModelId::H3 => -1.0,
            ModelId::SPinch => {
                let p = geo.point_at(tau.min(geo.len())).unwrap();
                models::gauss_curvature(&p)
            }
        }
    };
    let rhs = |tau: f64, s: &[f64; 6]| -> [f64; 6] {
        let tau_c = tau.min(geo.len());
        let sv = source(tau_c);
        let sc = frame.components(tau_c, &sv).unwrap();
        let k = curvature(tau_c);
        let mut out = [0.0; 6];
        out[0] = s[1];
        out[1] = -sc[0]; // tangential: a'' = -<S, s'> (curvature term vanishes)
        for i in 0..nd {
            out[2 + 2 * i] = s[3 + 2 * i];
            out[3 + 2 * i] = -k * s[2 + 2 * i] - sc[1 + i];
        }
        out
    };
    let end = ode::integrate_to(rhs, y0, t, step);
    let mut val = vec![end[0]];
    let mut der = vec![end[1]];
    for i in 0..nd {
        val.push(end[2 + 2 * i]);
        der.push(end[3 + 2 * i]);
    }
    Ok((frame.assemble(t, &val)?, frame.assemble(t, &der)?))
}

/// Report from a Rauch pinch check on one geodesic.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RauchReport {
    pub n_samples: usize,
    /// max over samples of (t|D0| - |X_t|) / (t|D0|), clamped at 0.
    pub max_lower_violation: f64,
    /// max over samples of (|X_t| - sinh t |D0|) / (sinh t |D0|), clamped at 0.
    pub max_upper_violation: f64,
    pub worst_t: f64,
    pub worst_ratio_lower: f64,
    pub worst_ratio_upper: f64,
}

/// Check the Rauch pinch t |D0| <= |X_t| <= sinh(t) |D0| for the Jacobi
/// field with X_0 = 0 and normal D_t X_0 = d0, sampled on (0, t_max].
pub fn rauch_check(
    geo: &Geodesic,
    d0: &TangentVec,
    t_max: f64,
    n_samples: usize,
) -> Result<RauchReport> {
    require_unit_speed(geo)?;
    let u0 = geo.unit_velocity_at(0.0)?;
    let p0 = geo.start();
    let tang = metric_inner(&p0, d0, &u0)?;
    if tang.abs() > 1e-8 * d0.norm().max(1.0) {
        return Err(Error::Degenerate(format!(
            "rauch_check needs a normal initial derivative (tangential part {tang:.3e})"
        )));
    }
    if t_max <= 0.0 || t_max > geo.len() + 1e-9 {
        return Err(Error::OutsideInterval { t: t_max, len: geo.len() });
    }
    let field = JacobiField::ivp(geo, &TangentVec::zero(p0), d0)?;
    let d0_norm = d0.norm();
    let mut rep = RauchReport {
        n_samples,
        max_lower_violation: 0.0,
        max_upper_violation: 0.0,
        worst_t: 0.0,
        worst_ratio_lower: f64::INFINITY,
        worst_ratio_upper: 0.0,
    };
    let mut worst = -1.0f64;
    for j in 1..=n_samples {
        let t = t_max * j as f64 / n_samples as f64;
        let (x, _) = field.eval(t)?;
        let norm = x.norm();
        let lower = t * d0_norm;
        let upper = t.sinh() * d0_norm;
        let viol_low = ((lower - norm) / lower).max(0.0);
        let viol_up = ((norm - upper) / upper).max(0.0);
        rep.max_lower_violation = rep.max_lower_violation.max(viol_low);
        rep.max_upper_violation = rep.max_upper_violation.max(viol_up);
        let v = viol_low.max(viol_up);
        if v > worst {
            worst = v;
            rep.worst_t = t;
            rep.worst_ratio_lower = norm / lower;
            rep.worst_ratio_upper = norm / upper;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests;
