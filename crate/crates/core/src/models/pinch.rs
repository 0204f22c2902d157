//! The pinched-curvature conformal surface: e^{2u}(dx^2 + dy^2) on R^2
//! with u = (x^2 + y^2)/4. Gauss curvature is -e^{-2u} * laplacian(u)
//! = -e^{-(x^2+y^2)/2}, so the pinching -1 <= K < 0 holds everywhere and
//! the surface is a complete Cartan-Hadamard plane.
//!
//! Geodesics are integrated with fixed-step RK4 on the chart; two-point
//! problems use multiple shooting on the 4-D geodesic flow with Newton
//! iteration on the unknown velocities and a Euclidean-chord initial guess.

use nalgebra::{DMatrix, DVector};

use super::{Geodesic, ModelId, PinchParams, Point, TangentVec};
use crate::error::{Error, Result};
use crate::ode::{self, DenseTraj};

fn u_grad(x: f64, y: f64) -> (f64, f64) {
    (0.5 * x, 0.5 * y)
}

fn conformal(x: f64, y: f64) -> f64 {
    ((x * x + y * y) / 2.0).exp() // e^{2u}, u = (x^2+y^2)/4
}

pub fn metric_inner(p: &Point, a: &[f64], b: &[f64]) -> f64 {
    let (x, y) = p.chart();
    conformal(x, y) * (a[0] * b[0] + a[1] * b[1])
}

pub fn gauss_curvature(x: f64, y: f64) -> f64 {
    (-(x * x + y * y) / 2.0).exp().copysign(-1.0)
}

/// Christoffel symbols Gamma^k_{ij} of the conformal metric at (x, y).
/// Symmetric in (i, j) by construction.
pub fn christoffel(x: f64, y: f64) -> [[[f64; 2]; 2]; 2] {
    let (ux, uy) = u_grad(x, y);
    [
        [[ux, uy], [uy, -ux]],   // Gamma^x
        [[-uy, ux], [ux, uy]],   // Gamma^y
    ]
}

/// Partial derivatives d Gamma^k_{ij} / d x^m. Constant for quadratic u.
fn christoffel_deriv() -> [[[[f64; 2]; 2]; 2]; 2] {
    // [m][k][i][j]
    let dx = [[[0.5, 0.0], [0.0, -0.5]], [[0.0, 0.5], [0.5, 0.0]]];
    let dy = [[[0.0, 0.5], [0.5, 0.0]], [[-0.5, 0.0], [0.0, 0.5]]];
    [dx, dy]
}

/// Geodesic equation RHS on the state (x, y, vx, vy).
pub fn geo_rhs(s: &[f64; 4]) -> [f64; 4] {
    let (ux, uy) = u_grad(s[0], s[1]);
    let (vx, vy) = (s[2], s[3]);
    let ax = -(ux * (vx * vx - vy * vy) + 2.0 * uy * vx * vy);
    let ay = -(uy * (vy * vy - vx * vx) + 2.0 * ux * vx * vy);
    [vx, vy, ax, ay]
}

/// Riemann curvature endomorphism R(X, Y) Z from the Christoffel-derivative
/// formula R^l_{ijk} = d_i G^l_{jk} - d_j G^l_{ik} + G^m_{jk} G^l_{im}
/// - G^m_{ik} G^l_{jm}.
pub fn curvature_op(p: &Point, x: &TangentVec, y: &TangentVec, z: &TangentVec) -> TangentVec {
    let (px, py) = p.chart();
    let g = christoffel(px, py);
    let dg = christoffel_deriv();
    let (xv, yv, zv) = (x.as_slice(), y.as_slice(), z.as_slice());
    let mut out = [0.0; 4];
    for l in 0..2 {
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut r = dg[i][l][j][k] - dg[j][l][i][k];
                    for m in 0..2 {
                        r += g[m][j][k] * g[l][i][m] - g[m][i][k] * g[l][j][m];
                    }
                    acc += r * xv[i] * yv[j] * zv[k];
                }
            }
        }
        out[l] = acc;
    }
    TangentVec::from_array(*p, out)
}

fn check_chart(params: &PinchParams, x: f64, y: f64) -> Result<()> {
    let b = params.chart_bound;
    if x.abs() > b || y.abs() > b {
        return Err(Error::ChartBounds { x, y, bound: b });
    }
    Ok(())
}

/// Unit-speed geodesic flow from p in direction `unit` over [0, arc_len],
/// stored densely at the configured step.
pub fn flow(
    params: &PinchParams,
    p: &Point,
    unit: &TangentVec,
    arc_len: f64,
) -> Result<DenseTraj<4>> {
    let (x, y) = p.chart();
    check_chart(params, x, y)?;
    if params.step <= 1e-12 {
        return Err(Error::StepUnderflow(params.step));
    }
    let v = unit.as_slice();
    let y0 = [x, y, v[0], v[1]];
    let traj = ode::integrate(|_t, s| geo_rhs(s), y0, arc_len, params.step);
    for st in &traj.states {
        check_chart(params, st[0], st[1])?;
    }
    Ok(traj)
}

pub fn exp(params: &PinchParams, p: &Point, x: &TangentVec, t: f64) -> Result<Point> {
    let speed = x.norm();
    if speed == 0.0 || t == 0.0 {
        return Ok(*p);
    }
    let arc = (t * speed).abs();
    let dir = if t >= 0.0 { x.scale(1.0 / speed) } else { x.scale(-1.0 / speed) };
    let traj = flow(params, p, &dir, arc)?;
    let end = traj.last();
    Ok(Point::from_array(ModelId::SPinch, [end[0], end[1], 0.0, 0.0]))
}

/// Metric length of the straight chart chord, used to seed the shooting
/// solver and choose the number of shooting segments.
fn chord_length(p: &Point, q: &Point) -> f64 {
    let (px, py) = p.chart();
    let (qx, qy) = q.chart();
    let chord = ((qx - px).powi(2) + (qy - py).powi(2)).sqrt();
    let n = 16;
    let mut acc = 0.0;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let (cx, cy) = (px + t * (qx - px), py + t * (qy - py));
        acc += w * conformal(cx, cy).sqrt();
    }
    acc * chord / (3.0 * n as f64)
}

/// Multiple-shooting solver state. Reusing a solver across nearby (p, q)
/// pairs warm-starts Newton from the previous solution.
pub struct Shooter {
    pub params: PinchParams,
    warm: Option<(usize, Vec<f64>)>,
}

impl Shooter {
    pub fn new(params: PinchParams) -> Self {
        Shooter { params, warm: None }
    }

    /// Initial velocity (in parameter time [0,1]) of the geodesic from p
    /// to q. The metric norm of the result is the Riemannian distance.
    pub fn solve(&mut self, p: &Point, q: &Point) -> Result<[f64; 2]> {
        let (px, py) = p.chart();
        let (qx, qy) = q.chart();
        check_chart(&self.params, px, py)?;
        check_chart(&self.params, qx, qy)?;
        if (px - qx).abs() < 1e-15 && (py - qy).abs() < 1e-15 {
            return Err(Error::Degenerate("geodesic BVP needs p != q".into()));
        }
        let est = chord_length(p, q);
        let m = ((est / 3.0).ceil() as usize).clamp(1, 6);
        let dim = 2 + 4 * (m - 1);

        let mut z: DVector<f64> = match &self.warm {
            Some((wm, wz)) if *wm == m => DVector::from_vec(wz.clone()),
            _ => {
                let mut z = DVector::zeros(dim);
                z[0] = qx - px;
                z[1] = qy - py;
                for i in 1..m {
                    let t = i as f64 / m as f64;
                    let o = 2 + 4 * (i - 1);
                    z[o] = px + t * (qx - px);
                    z[o + 1] = py + t * (qy - py);
                    z[o + 2] = qx - px;
                    z[o + 3] = qy - py;
                }
                z
            }
        };

        let residual = |z: &DVector<f64>| -> DVector<f64> {
            let mut res = DVector::zeros(dim);
            let seg_t = 1.0 / m as f64;
            for i in 0..m {
                let state: [f64; 4] = if i == 0 {
                    [px, py, z[0], z[1]]
                } else {
                    let o = 2 + 4 * (i - 1);
                    [z[o], z[o + 1], z[o + 2], z[o + 3]]
                };
                // Param-time speed ~ metric speed; pick the step so the
                // arc-length step matches the configured one.
                let sp = metric_speed(&state).max(1e-6);
                let n_steps = ((seg_t * sp / self.params.step).ceil() as usize).max(4);
                let h = seg_t / n_steps as f64;
                let mut s = state;
                for _ in 0..n_steps {
                    s = ode::rk4_step(&|_t, y: &[f64; 4]| geo_rhs(y), 0.0, &s, h);
                }
                if i + 1 < m {
                    let o = 2 + 4 * i;
                    res[o - 2] = s[0] - z[o];
                    res[o - 1] = s[1] - z[o + 1];
                    res[o] = s[2] - z[o + 2];
                    res[o + 1] = s[3] - z[o + 3];
                } else {
                    res[dim - 2] = s[0] - qx;
                    res[dim - 1] = s[1] - qy;
                }
            }
            res
        };

        let mut res = residual(&z);
        let mut best = res.amax();
        for iter in 0..self.params.bvp_max_newton {
            if best <= self.params.bvp_tol {
                self.warm = Some((m, z.as_slice().to_vec()));
                return Ok([z[0], z[1]]);
            }
            // Forward-difference Jacobian.
            let mut jac = DMatrix::zeros(dim, dim);
            for c in 0..dim {
                let eps = 1e-7 * (1.0 + z[c].abs());
                let mut zp = z.clone();
                zp[c] += eps;
                let rp = residual(&zp);
                for r in 0..dim {
                    jac[(r, c)] = (rp[r] - res[r]) / eps;
                }
            }
            let lu = jac.lu();
            let step = match lu.solve(&res) {
                Some(s) => s,
                None => {
                    return Err(Error::BvpNoConvergence { residual: best, iters: iter })
                }
            };
            // Damped update.
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..10 {
                let zt = &z - &step * lambda;
                let rt = residual(&zt);
                let nt = rt.amax();
                if nt < best {
                    z = zt;
                    res = rt;
                    best = nt;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(Error::BvpNoConvergence { residual: best, iters: iter });
            }
        }
        if best <= self.params.bvp_tol {
            self.warm = Some((m, z.as_slice().to_vec()));
            return Ok([z[0], z[1]]);
        }
        Err(Error::BvpNoConvergence { residual: best, iters: self.params.bvp_max_newton })
    }
}

fn metric_speed(state: &[f64; 4]) -> f64 {
    (conformal(state[0], state[1]) * (state[2] * state[2] + state[3] * state[3])).sqrt()
}

impl Shooter {
    /// Riemannian distance via the solved initial velocity.
    pub fn distance(&mut self, p: &Point, q: &Point) -> Result<f64> {
        if p == q {
            return Ok(0.0);
        }
        let v0 = self.solve(p, q)?;
        let (px, py) = p.chart();
        Ok((conformal(px, py) * (v0[0] * v0[0] + v0[1] * v0[1])).sqrt())
    }
}

pub fn connect_velocity(params: &PinchParams, p: &Point, q: &Point) -> Result<[f64; 2]> {
    Shooter::new(*params).solve(p, q)
}

pub fn distance(params: &PinchParams, p: &Point, q: &Point) -> Result<f64> {
    if p == q {
        return Ok(0.0);
    }
    let v0 = connect_velocity(params, p, q)?;
    let (px, py) = p.chart();
    Ok((conformal(px, py) * (v0[0] * v0[0] + v0[1] * v0[1])).sqrt())
}

/// Parallel transport along an S_pinch geodesic via the transport ODE
/// dX^k/ds = -Gamma^k_{ij} c'^i X^j, driven by the cached trajectory.
pub fn transport(geo: &Geodesic, x: &TangentVec, t0: f64, t1: f64) -> Result<TangentVec> {
    let traj = geo.pinch_traj().expect("S_pinch geodesic carries a trajectory");
    let speed = geo.speed();
    let (s0, s1) = (t0 * speed, t1 * speed);
    let sign = if s1 >= s0 { 1.0 } else { -1.0 };
    let arc = (s1 - s0).abs();
    let xs = x.as_slice();
    let rhs = |tau: f64, st: &[f64; 2]| -> [f64; 2] {
        let s = s0 + sign * tau;
        let c = traj.eval(s.clamp(0.0, traj.t_end));
        let g = christoffel(c[0], c[1]);
        let v = [sign * c[2], sign * c[3]];
        let mut out = [0.0; 2];
        for k in 0..2 {
            let mut acc = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    acc -= g[k][i][j] * v[i] * st[j];
                }
            }
            out[k] = acc;
        }
        out
    };
    let end = ode::integrate_to(rhs, [xs[0], xs[1]], arc, traj.h);
    let base1 = geo.point_at(t1)?;
    Ok(TangentVec::from_array(base1, [end[0], end[1], 0.0, 0.0]))
}

/// In 2-D the metric-orthogonal rotation of the velocity gives a parallel
/// unit normal along any geodesic (conformal chart: rotate by 90 degrees).
pub fn unit_normal(base: Point, unit_velocity: &TangentVec) -> TangentVec {
    let v = unit_velocity.as_slice();
    TangentVec::from_array(base, [-v[1], v[0], 0.0, 0.0])
}

impl Geodesic {
    pub(crate) fn pinch_traj(&self) -> Option<&DenseTraj<4>> {
        self.pinch.as_deref().map(|p| &p.traj)
    }
}
