//! Hyperboloid-model closed forms shared by H2 (ambient R^{2,1}) and
//! H3 (ambient R^{3,1}). The Minkowski form is x1*y1 + ... - x_last*y_last;
//! points satisfy <x,x> = -1 with positive last coordinate, and the form
//! restricted to tangent spaces is positive definite.

use super::{Geodesic, Point, TangentVec};
use crate::error::{Error, Result};
use crate::tol;

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    let d = a.len();
    let mut s = 0.0;
    for i in 0..d - 1 {
        s += a[i] * b[i];
    }
    s - a[d - 1] * b[d - 1]
}

/// Pull a drifting point back onto the sheet <x,x> = -1, x_last >= 1.
///
/// The last coordinate is recomputed from the spatial ones. Rescaling by
/// the raw quadratic form would be catastrophically ill-conditioned at
/// large radius (it cancels products of cosh-sized coordinates), whereas
/// sqrt(1 + |spatial|^2) has no cancellation.
pub fn renormalize(p: &mut Point) -> Result<()> {
    let d = p.model.ambient_dim();
    let mut c = p.array();
    let q = inner(&c[..d], &c[..d]);
    let mag2 = c[..d].iter().map(|v| v * v).sum::<f64>();
    if !c[d - 1].is_finite() || c[d - 1] <= 0.0 || (q + 1.0).abs() > 1e-6 * (1.0 + mag2) {
        return Err(Error::Degenerate(format!(
            "coordinates not on the upper hyperboloid sheet: <x,x> = {q:.3e}"
        )));
    }
    let spatial2: f64 = c[..d - 1].iter().map(|v| v * v).sum();
    c[d - 1] = (1.0 + spatial2).sqrt();
    *p = Point::from_array(p.model, c);
    // The residual of the constraint itself still scales with the squared
    // coordinate size; the projection is accurate along the sheet.
    debug_assert!(
        (inner(&p.array()[..d], &p.array()[..d]) + 1.0).abs()
            <= tol::HYPERBOLOID_NORMALIZATION * (1.0 + mag2)
    );
    Ok(())
}

pub fn tangency_violation(t: &TangentVec) -> f64 {
    inner(t.as_slice(), t.base.as_slice()).abs()
}

/// Project an ambient vector onto the tangent space at p:
/// v + <v,p> p (using <p,p> = -1).
pub fn project(p: &Point, ambient: &[f64]) -> TangentVec {
    let d = p.model.ambient_dim();
    let c = inner(ambient, p.as_slice());
    let mut v = [0.0; 4];
    for i in 0..d {
        v[i] = ambient[i] + c * p.as_slice()[i];
    }
    TangentVec::from_array(*p, v)
}

pub fn distance(p: &Point, q: &Point) -> f64 {
    if p == q {
        return 0.0;
    }
    let c = -inner(p.as_slice(), q.as_slice());
    c.max(1.0).acosh()
}

pub fn exp(p: &Point, x: &TangentVec, t: f64) -> Point {
    let d = p.model.ambient_dim();
    let speed = inner(x.as_slice(), x.as_slice()).max(0.0).sqrt();
    let theta = t * speed;
    if speed == 0.0 || theta.abs() < 1e-300 {
        return *p;
    }
    let (ch, sh) = (theta.cosh(), theta.sinh());
    let mut c = [0.0; 4];
    for i in 0..d {
        c[i] = ch * p.as_slice()[i] + sh * x.as_slice()[i] / speed;
    }
    let mut out = Point::from_array(p.model, c);
    renormalize(&mut out).expect("exp image stays on the sheet");
    out
}

pub fn log(p: &Point, q: &Point) -> TangentVec {
    let d = p.model.ambient_dim();
    let theta = distance(p, q);
    if theta < 1e-12 {
        // First-order: project the chord.
        let mut chord = [0.0; 4];
        for i in 0..d {
            chord[i] = q.as_slice()[i] - p.as_slice()[i];
        }
        return project(p, &chord[..d]);
    }
    let ch = theta.cosh();
    let sh = theta.sinh();
    let mut v = [0.0; 4];
    for i in 0..d {
        v[i] = (q.as_slice()[i] - ch * p.as_slice()[i]) * theta / sh;
    }
    // Clean any Minkowski-normal drift.
    let t = TangentVec::from_array(*p, v);
    let c = inner(t.as_slice(), p.as_slice());
    let mut v2 = [0.0; 4];
    for i in 0..d {
        v2[i] = v[i] + c * p.as_slice()[i];
    }
    TangentVec::from_array(*p, v2)
}

pub fn geo_point(geo: &Geodesic, t: f64) -> Point {
    exp(&geo.start(), &geo.velocity(), t)
}

pub fn geo_velocity(geo: &Geodesic, t: f64) -> TangentVec {
    let d = geo.model().ambient_dim();
    let speed = geo.speed();
    let theta = t * speed;
    let p = geo.start();
    let u = geo.velocity().scale(1.0 / speed);
    let (ch, sh) = (theta.cosh(), theta.sinh());
    // gamma'(t) = speed * (sinh(theta) p + cosh(theta) u)
    let base = geo_point(geo, t);
    let mut v = [0.0; 4];
    for i in 0..d {
        v[i] = speed * (sh * p.as_slice()[i] + ch * u.as_slice()[i]);
    }
    // Tiny anchor defects (<p,u> != 0, |u| != 1) are amplified by
    // cosh^2(theta); restore tangency and the exact speed here.
    let c = inner(&v[..d], base.as_slice());
    for i in 0..d {
        v[i] += c * base.as_slice()[i];
    }
    let norm = inner(&v[..d], &v[..d]).max(0.0).sqrt();
    if norm > 0.0 {
        let scale = speed / norm;
        for x in v[..d].iter_mut() {
            *x *= scale;
        }
    }
    TangentVec::from_array(base, v)
}

/// Parallel transport along a geodesic: the component along the velocity
/// rides with it, the Minkowski-orthogonal complement of span(p, u) is
/// constant.
pub fn transport(geo: &Geodesic, x: &TangentVec, t0: f64, t1: f64) -> Result<TangentVec> {
    let d = geo.model().ambient_dim();
    let p0 = geo.point_at(t0)?;
    let u0 = geo.unit_velocity_at(t0)?;
    let s = (t1 - t0) * geo.speed();
    let a = inner(x.as_slice(), u0.as_slice());
    let (ch, sh) = (s.cosh(), s.sinh());
    let base1 = geo.point_at(t1)?;
    // u(s) = sinh(s) p0 + cosh(s) u0
    let mut v = [0.0; 4];
    for i in 0..d {
        let w = x.as_slice()[i] - a * u0.as_slice()[i];
        v[i] = w + a * (sh * p0.as_slice()[i] + ch * u0.as_slice()[i]);
    }
    // Project out drift against the new base point and restore the norm.
    let c = inner(&v[..d], base1.as_slice());
    for i in 0..d {
        v[i] += c * base1.as_slice()[i];
    }
    let n_in = inner(x.as_slice(), x.as_slice()).max(0.0).sqrt();
    let n_out = inner(&v[..d], &v[..d]).max(0.0).sqrt();
    if n_out > 0.0 && n_in > 0.0 {
        let scale = n_in / n_out;
        for y in v[..d].iter_mut() {
            *y *= scale;
        }
    }
    Ok(TangentVec::from_array(base1, v))
}
