//! Cone-in-tube containment: in pinched curvature -1 <= K <= 0, the cone
//! of aperture theta_T (defined by sin(theta_T/2) = sinh(R/2)/sinh(T))
//! about a geodesic, truncated at radius T, stays inside the tube of
//! radius R around that geodesic.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{
    self, distance_with, exp_map_with, metric_inner, Geodesic, ModelId, PinchParams, Point,
    TangentVec,
};
use crate::sampler;
use crate::tol;

/// Cone of aperture `theta` and radius `t_max` about `axis` at `vertex`.
#[derive(Debug, Clone)]
pub struct ConeSpec {
    pub vertex: Point,
    pub axis: TangentVec,
    pub theta: f64,
    pub t_max: f64,
}

impl ConeSpec {
    pub fn new(vertex: Point, axis: TangentVec, theta: f64, t_max: f64) -> Result<ConeSpec> {
        if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config(format!("cone aperture {theta} not in (0, pi/2]")));
        }
        if !(t_max > 0.0) {
            return Err(Error::Config(format!("cone radius {t_max} must be positive")));
        }
        let axis = axis.normalized()?;
        Ok(ConeSpec { vertex, axis, theta, t_max })
    }
}

/// Tube of radius `radius` about the core geodesic.
#[derive(Debug, Clone)]
pub struct TubeSpec {
    pub core: Geodesic,
    pub radius: f64,
}

impl TubeSpec {
    pub fn new(core: Geodesic, radius: f64) -> Result<TubeSpec> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!("tube radius {radius} must be positive")));
        }
        Ok(TubeSpec { core, radius })
    }
}

/// The aperture theta_T with sin(theta_T / 2) = sinh(R/2) / sinh(T).
pub fn theta_t(r: f64, t: f64) -> Result<f64> {
    let x = (r / 2.0).sinh() / t.sinh();
    if x > 1.0 {
        return Err(Error::ApertureDomain(x));
    }
    Ok(2.0 * x.asin())
}

/// Distance from q to the core geodesic (searched over the core's
/// parameter interval) and the argmin parameter. Golden-section on the
/// convex section distance, with an optional initial guess for the foot.
pub fn distance_to_geodesic(
    q: &Point,
    core: &Geodesic,
    hint: Option<f64>,
) -> Result<(f64, f64)> {
    distance_to_geodesic_with(&PinchParams::default(), q, core, hint)
}

pub fn distance_to_geodesic_with(
    params: &PinchParams,
    q: &Point,
    core: &Geodesic,
    hint: Option<f64>,
) -> Result<(f64, f64)> {
    let len = core.len();
    let mut shooter = if core.model() == ModelId::SPinch {
        Some(models::PinchShooter::new(*params))
    } else {
        None
    };
    let mut d = |s: f64| -> Result<f64> {
        let c = core.point_at(s)?;
        if c == *q {
            return Ok(0.0);
        }
        match &mut shooter {
            Some(sh) => match sh.distance(&c, q) {
                Ok(v) => Ok(v),
                Err(_) => {
                    *sh = models::PinchShooter::new(*params);
                    sh.distance(&c, q)
                }
            },
            None => distance_with(params, &c, q),
        }
    };

    // Bracket the minimum: start from the hint (or interval middle) and
    // widen until the middle value undercuts both ends, using convexity.
    let mut lo = 0.0f64;
    let mut hi = len;
    if let Some(h) = hint {
        let mut w = 1.0f64;
        loop {
            let a = (h - w).max(0.0);
            let b = (h + w).min(len);
            let mid = 0.5 * (a + b);
            if (d(mid)? <= d(a)?.min(d(b)?) + 1e-12) || (a == 0.0 && b == len) {
                lo = a;
                hi = b;
                break;
            }
            w *= 2.0;
        }
    }

    // Golden-section to a parameter tolerance fine enough that the
    // gradient residual at the argmin is below tol::FOOT_GRADIENT_RESIDUAL.
    let phi_inv = 0.618_033_988_749_894_9_f64;
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - phi_inv * (b - a);
    let mut x2 = a + phi_inv * (b - a);
    let mut f1 = d(x1)?;
    let mut f2 = d(x2)?;
    while b - a > 1e-9 * (1.0 + len) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi_inv * (b - a);
            f1 = d(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi_inv * (b - a);
            f2 = d(x2)?;
        }
    }
    let s_star = 0.5 * (a + b);
    Ok((d(s_star)?, s_star))
}

#[derive(Debug, Clone, Copy)]
pub struct ConeTubeConfig {
    pub model: ModelId,
    pub tube_radius: f64,
    pub t_cone: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub pinch: PinchParams,
}

impl ConeTubeConfig {
    pub fn new(model: ModelId, tube_radius: f64, t_cone: f64, n_samples: usize, seed: u64) -> Self {
        // The model-level default step is tuned for 1e-8-accurate BVP
        // derivatives; containment only needs ~1e-6 distances, so the
        // scan uses a coarser default on the conformal surface.
        let pinch = PinchParams { step: 4e-3, ..PinchParams::default() };
        ConeTubeConfig { model, tube_radius, t_cone, n_samples, seed, pinch }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeTubeReport {
    pub model: ModelId,
    pub tube_radius: f64,
    pub t_cone: f64,
    pub theta_t: f64,
    pub n: usize,
    /// max over samples of d(q, core) / R.
    pub max_ratio: f64,
    /// Ratio for the extreme probe (distance exactly T, angle exactly theta_T).
    pub boundary_probe_ratio: f64,
    pub violations: Vec<u64>,
}

/// Sample the cone C(theta_T; T) and assert every sample stays within
/// distance R of the core. Sampling stresses the cone boundary: distance
/// uniform in [0.1 T, T], angle uniform in [0, theta_T], both +- axis
/// directions and normal sides.
pub fn cone_in_tube_check(cfg: &ConeTubeConfig) -> Result<ConeTubeReport> {
    if !matches!(cfg.model, ModelId::H2 | ModelId::SPinch) {
        return Err(Error::Config(format!(
            "cone-in-tube check runs on H2 or S_pinch, got {:?}",
            cfg.model
        )));
    }
    let theta = theta_t(cfg.tube_radius, cfg.t_cone)?;
    // Core long enough to contain every candidate foot, vertex at the middle.
    let half = cfg.t_cone + cfg.tube_radius + 2.0;
    let o = sampler::origin(cfg.model);
    let axis = models::tangent_basis(&o)[0];
    let core = Geodesic::through_with(&cfg.pinch, &o, &axis, half, 2.0 * half)?;
    let vertex_param = half;

    let results: Vec<(f64, Option<u64>)> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|i| -> Result<(f64, Option<u64>)> {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i.wrapping_add(0x7001));
            let t = cfg.t_cone * (0.1 + 0.9 * rng.gen::<f64>());
            let ang = theta * rng.gen::<f64>();
            let axis_sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let normals = models::normal_basis_at(&o, &axis);
            let side = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let dir = axis
                .scale(axis_sign * ang.cos())
                .add(&normals[0].scale(side * ang.sin()));
            let q = exp_map_with(&cfg.pinch, &o, &dir, t)?;
            // Membership predicate: inside the ball and inside the cone.
            let g = models::grad_distance_with(&cfg.pinch, &o, &q)?;
            let cone_angle = models::angle(&axis, &g)?;
            debug_assert!(cone_angle.min(std::f64::consts::PI - cone_angle) <= theta + 1e-6);
            let hint = vertex_param + axis_sign * t * ang.cos();
            let (dist, _) =
                distance_to_geodesic_with(&cfg.pinch, &q, &core, Some(hint))?;
            let ratio = dist / cfg.tube_radius;
            let viol = if dist > cfg.tube_radius + tol::RAUCH_SLACK { Some(i) } else { None };
            Ok((ratio, viol))
        })
        .collect::<Result<Vec<_>>>()?;

    let max_ratio = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let violations: Vec<u64> = results.iter().filter_map(|r| r.1).collect();

    // Extreme probe: distance exactly T, angle exactly theta_T.
    let normals = models::normal_basis_at(&o, &axis);
    let dir = axis.scale(theta.cos()).add(&normals[0].scale(theta.sin()));
    let q = exp_map_with(&cfg.pinch, &o, &dir, cfg.t_cone)?;
    let hint = vertex_param + cfg.t_cone * theta.cos();
    let (dist, _) = distance_to_geodesic_with(&cfg.pinch, &q, &core, Some(hint))?;
    let boundary_probe_ratio = dist / cfg.tube_radius;

    Ok(ConeTubeReport {
        model: cfg.model,
        tube_radius: cfg.tube_radius,
        t_cone: cfg.t_cone,
        theta_t: theta,
        n: cfg.n_samples,
        max_ratio: max_ratio.max(boundary_probe_ratio),
        boundary_probe_ratio,
        violations,
    })
}
