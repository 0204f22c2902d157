//! The two-parameter variation through geodesics: for unit-speed segments
//! eta and gamma, Psi(r, s, t) is the time-t value of the geodesic from
//! eta(r) to gamma(s) on [0, rho0], and phi(r, s) = d(eta(r), gamma(s)).
//!
//! The mixed partials of phi at (r0, s0) are computed by independent
//! routes:
//!
//! - intrinsic: Jacobi-field data along the connecting geodesic sigma,
//!   via the second variation formula d2_rs phi = -<V0_perp, D_t W0_perp>
//!   and its third-order extension,
//! - normal coordinates: the log-map coordinate curve x(s) about eta(r0)
//!   with the coordinate expressions for d2_rs phi and d3_rss phi,
//! - finite differences of phi itself,
//! - constant-curvature closed forms (coth / csch expressions) on H2/H3.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{self, FdSteps};
use crate::jacobi::{decompose_against, jacobi_bvp, JacobiField};
use crate::models::{
    self, distance_with, geodesic_connect_with, log_map, metric_inner, Geodesic, ModelId,
    PinchParams, Point, TangentVec,
};
use crate::tol;

/// Settings for building variations and differentiating phi.
#[derive(Debug, Clone, Copy)]
pub struct VariationConfig {
    /// Minimal accepted separation d(gamma(s0), eta(r0)).
    pub d_min: f64,
    pub pinch: PinchParams,
    pub fd: FdSteps,
}

impl Default for VariationConfig {
    fn default() -> Self {
        VariationConfig {
            d_min: tol::VARIATION_D_MIN,
            pinch: PinchParams::default(),
            fd: FdSteps::default(),
        }
    }
}

/// Which computation produced a set of partials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Intrinsic,
    NormalCoords,
    FiniteDiff,
    HyperbolicClosedForm,
}

/// Values of phi and its partials at (r0, s0), tagged with the route.
/// Fields a route cannot produce are None.
#[derive(Debug, Clone, Serialize)]
pub struct PartialsReport {
    pub route: Route,
    pub phi: f64,
    pub d_r: f64,
    pub d_s: f64,
    pub d2_rs: f64,
    pub d2_rr: Option<f64>,
    pub d2_ss: Option<f64>,
    pub d3_rss: Option<f64>,
    /// Additional mixed partials keyed as "d{k}_{r..s..}".
    pub higher: Vec<(String, f64)>,
    /// Worst relative Richardson disagreement seen while differencing.
    pub fd_diagnostic: f64,
}

impl PartialsReport {
    fn empty(route: Route) -> Self {
        PartialsReport {
            route,
            phi: f64::NAN,
            d_r: f64::NAN,
            d_s: f64::NAN,
            d2_rs: f64::NAN,
            d2_rr: None,
            d2_ss: None,
            d3_rss: None,
            higher: Vec::new(),
            fd_diagnostic: 0.0,
        }
    }

    pub fn higher_get(&self, key: &str) -> Option<f64> {
        self.higher.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// The variation data at a base configuration (eta, gamma, r0, s0).
pub struct GeodesicVariation {
    pub model: ModelId,
    pub eta: Geodesic,
    pub gamma: Geodesic,
    pub r0: f64,
    pub s0: f64,
    pub rho0: f64,
    /// Unit-speed connecting geodesic from eta(r0) to gamma(s0) on [0, rho0].
    pub sigma: Geodesic,
    /// Jacobi field with V_0 = eta'(r0), V_rho0 = 0.
    pub v: JacobiField,
    /// Jacobi field with W_0 = 0, W_rho0 = gamma'(s0).
    pub w: JacobiField,
    cfg: VariationConfig,
}

/// Evaluator of phi(r, s) = d(eta(r), gamma(s)) that keeps the shooting
/// solver warm across nearby evaluations and records the first error.
struct PhiEval<'a> {
    eta: &'a Geodesic,
    gamma: &'a Geodesic,
    pinch: PinchParams,
    shooter: Option<models::PinchShooter>,
    error: Option<Error>,
}

impl<'a> PhiEval<'a> {
    fn new(eta: &'a Geodesic, gamma: &'a Geodesic, pinch: PinchParams) -> Self {
        let shooter = if eta.model() == ModelId::SPinch {
            Some(models::PinchShooter::new(pinch))
        } else {
            None
        };
        PhiEval { eta, gamma, pinch, shooter, error: None }
    }

    fn eval(&mut self, r: f64, s: f64) -> f64 {
        let inner = |this: &mut Self| -> Result<f64> {
            let p = this.eta.point_at(r)?;
            let q = this.gamma.point_at(s)?;
            match &mut this.shooter {
                Some(sh) => match sh.distance(&p, &q) {
                    Ok(d) => Ok(d),
                    Err(_) => {
                        // Retry cold once; warm starts can strand Newton.
                        *sh = models::PinchShooter::new(this.pinch);
                        sh.distance(&p, &q)
                    }
                },
                None => distance_with(&this.pinch, &p, &q),
            }
        };
        match inner(self) {
            Ok(v) => v,
            Err(e) => {
                if self.error.is_none() {
                    self.error = Some(e);
                }
                f64::NAN
            }
        }
    }
}

/// Build the variation at (r0, s0): connecting geodesic and the two
/// boundary-value Jacobi fields V and W.
pub fn build_variation(
    cfg: &VariationConfig,
    eta: &Geodesic,
    gamma: &Geodesic,
    r0: f64,
    s0: f64,
) -> Result<GeodesicVariation> {
    if (eta.speed() - 1.0).abs() > 1e-9 || (gamma.speed() - 1.0).abs() > 1e-9 {
        return Err(Error::Degenerate("variation needs unit-speed eta, gamma".into()));
    }
    let model = eta.model();
    let p = eta.point_at(r0)?;
    let q = gamma.point_at(s0)?;
    let rho0 = distance_with(&cfg.pinch, &p, &q)?;
    if rho0 < cfg.d_min {
        return Err(Error::Degenerate(format!(
            "geodesics too close: d = {rho0:.6} < d_min = {}",
            cfg.d_min
        )));
    }
    let sigma = geodesic_connect_with(&cfg.pinch, &p, &q, rho0)?;
    let eta_dot = eta.velocity_at(r0)?;
    let gamma_dot = gamma.velocity_at(s0)?;
    let sigma_end = sigma.point_at(rho0)?;
    let v = jacobi_bvp(&sigma, &eta_dot, &TangentVec::zero(sigma_end))?;
    let w = jacobi_bvp(&sigma, &TangentVec::zero(sigma.start()), &gamma_dot)?;
    Ok(GeodesicVariation {
        model,
        eta: eta.clone(),
        gamma: gamma.clone(),
        r0,
        s0,
        rho0,
        sigma,
        v,
        w,
        cfg: *cfg,
    })
}

impl GeodesicVariation {
    pub fn config(&self) -> &VariationConfig {
        &self.cfg
    }

    /// Maximal residual of the construction invariants (endpoint data of
    /// V and W, sigma endpoints, unit speed).
    pub fn validate(&self) -> Result<f64> {
        let mut worst = (self.sigma.speed() - 1.0).abs();
        let (v_end, _) = self.v.eval(self.rho0)?;
        worst = worst.max(v_end.norm());
        let (w_end, _) = self.w.eval(self.rho0)?;
        let gamma_dot = self.gamma.velocity_at(self.s0)?;
        worst = worst.max(w_end.sub(&gamma_dot).norm());
        let (v0, _) = self.v.eval(0.0)?;
        let eta_dot = self.eta.velocity_at(self.r0)?;
        worst = worst.max(v0.sub(&eta_dot).norm());
        let q = self.gamma.point_at(self.s0)?;
        let end = self.sigma.point_at(self.rho0)?;
        let end_res: f64 = end
            .as_slice()
            .iter()
            .zip(q.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(worst.max(end_res))
    }

    fn sigma_dot0(&self) -> TangentVec {
        self.sigma.unit_velocity_at(0.0).unwrap()
    }

    fn base(&self) -> Point {
        self.sigma.start()
    }
}

/// (d_r phi, d_s phi) = (-<sigma'_0, eta'(r0)>, <sigma'_rho0, gamma'(s0)>).
pub fn phi_first_partials(v: &GeodesicVariation) -> Result<(f64, f64)> {
    let p = v.base();
    let eta_dot = v.eta.velocity_at(v.r0)?;
    let d_r = -metric_inner(&p, &v.sigma_dot0(), &eta_dot)?;
    let q = v.sigma.point_at(v.rho0)?;
    let gamma_dot = v.gamma.velocity_at(v.s0)?;
    let d_s = metric_inner(&q, &v.sigma.unit_velocity_at(v.rho0)?, &gamma_dot)?;
    Ok((d_r, d_s))
}

/// Second variation formula: d2_rs phi = -<V0_perp, D_t W0_perp>.
pub fn second_variation(v: &GeodesicVariation) -> Result<f64> {
    let p = v.base();
    let (_, v0_perp) = decompose_against(&v.sigma, 0.0, &v.v.value0())?;
    let (_, dw0_perp) = decompose_against(&v.sigma, 0.0, &v.w.deriv0())?;
    Ok(-metric_inner(&p, &v0_perp, &dw0_perp)?)
}

/// Pure second partials: d2_rr phi = -<D_t V0_perp, V0_perp> and the
/// mirrored expression at t = rho0 for d2_ss phi.
pub fn second_variation_rr_ss(v: &GeodesicVariation) -> Result<(f64, f64)> {
    let p = v.base();
    let (_, v0_perp) = decompose_against(&v.sigma, 0.0, &v.v.value0())?;
    let (_, dv0_perp) = decompose_against(&v.sigma, 0.0, &v.v.deriv0())?;
    let d2_rr = -metric_inner(&p, &dv0_perp, &v0_perp)?;

    let (w_end, dw_end) = v.w.eval(v.rho0)?;
    let q = v.sigma.point_at(v.rho0)?;
    let (_, w_end_perp) = decompose_against(&v.sigma, v.rho0, &w_end)?;
    let (_, dw_end_perp) = decompose_against(&v.sigma, v.rho0, &dw_end)?;
    let d2_ss = metric_inner(&q, &dw_end_perp, &w_end_perp)?;
    Ok((d2_rr, d2_ss))
}

/// D_s^2 d_t Psi at (r0, s0, 0): since Psi(r0, s, 0) = eta(r0) is fixed,
/// s -> D_t d_s Psi(r0, s, 0) is a curve in the fixed tangent space at
/// eta(r0) and its plain derivative is the covariant one. Each value is
/// the initial derivative of the Jacobi BVP along the connecting geodesic
/// to gamma(s), rescaled from unit-speed to [0, rho0] parameterization.
///
/// Returns the tangent vector and the relative Richardson disagreement.
pub fn s_acceleration(v: &GeodesicVariation) -> Result<(TangentVec, f64)> {
    let p = v.base();
    let rho0 = v.rho0;
    let cfg = v.cfg;
    let f = |s: f64| -> Result<TangentVec> {
        let q = v.gamma.point_at(s)?;
        let l = distance_with(&cfg.pinch, &p, &q)?;
        let con = geodesic_connect_with(&cfg.pinch, &p, &q, l)?;
        let gdot = v.gamma.velocity_at(s)?;
        let end = con.point_at(l)?;
        let gdot_at_end = gdot.rebased(end);
        let w = jacobi_bvp(&con, &TangentVec::zero(p), &gdot_at_end)?;
        Ok(w.deriv0().scale(l / rho0))
    };
    let h = v.cfg.fd.h1;
    let diff = |h: f64| -> Result<TangentVec> {
        let plus = f(v.s0 + h)?;
        let minus = f(v.s0 - h)?;
        Ok(plus.sub(&minus).scale(0.5 / h))
    };
    let coarse = diff(h)?;
    let fine = diff(h / 2.0)?;
    let rich = fine.scale(4.0 / 3.0).sub(&coarse.scale(1.0 / 3.0));
    let denom = rich.norm().max(1e-300);
    let disagreement = fine.sub(&coarse).norm() / denom;
    if disagreement > 0.10 {
        return Err(Error::FdNoise {
            what: "s_acceleration Richardson step".into(),
            disagreement: disagreement * 100.0,
        });
    }
    Ok((rich, disagreement))
}

/// Third variation formula:
/// d3_rss phi = -<V0_perp, A_perp> + 2 <D_t W0_perp, V0_perp><D_t W0, s'_0>
///            + |D_t W0_perp|^2 <V0, s'_0>,
/// with A = D_s^2 d_t Psi at (r0, s0, 0).
pub fn third_variation(v: &GeodesicVariation) -> Result<f64> {
    let (accel, _) = s_acceleration(v)?;
    third_variation_with_accel(v, &accel)
}

pub fn third_variation_with_accel(v: &GeodesicVariation, accel: &TangentVec) -> Result<f64> {
    let p = v.base();
    let sdot0 = v.sigma_dot0();
    let (_, v0_perp) = decompose_against(&v.sigma, 0.0, &v.v.value0())?;
    let (_, dw0_perp) = decompose_against(&v.sigma, 0.0, &v.w.deriv0())?;
    let (_, accel_perp) = decompose_against(&v.sigma, 0.0, accel)?;
    let term1 = -metric_inner(&p, &v0_perp, &accel_perp)?;
    let dw0_tang = metric_inner(&p, &v.w.deriv0(), &sdot0)?;
    let term2 = 2.0 * metric_inner(&p, &dw0_perp, &v0_perp)? * dw0_tang;
    let v0_tang = metric_inner(&p, &v.v.value0(), &sdot0)?;
    let term3 = dw0_perp.norm().powi(2) * v0_tang;
    Ok(term1 + term2 + term3)
}

/// All partials the intrinsic (Jacobi-field) route can produce.
pub fn intrinsic_partials(v: &GeodesicVariation) -> Result<PartialsReport> {
    let mut rep = PartialsReport::empty(Route::Intrinsic);
    rep.phi = v.rho0;
    let (d_r, d_s) = phi_first_partials(v)?;
    rep.d_r = d_r;
    rep.d_s = d_s;
    rep.d2_rs = second_variation(v)?;
    let (d2_rr, d2_ss) = second_variation_rr_ss(v)?;
    rep.d2_rr = Some(d2_rr);
    rep.d2_ss = Some(d2_ss);
    let (accel, diag) = s_acceleration(v)?;
    rep.d3_rss = Some(third_variation_with_accel(v, &accel)?);
    rep.fd_diagnostic = diag;
    Ok(rep)
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Coordinate route: geodesic normal coordinates about eta(r0) via the
/// log map, with x(s) the coordinate curve of gamma and y = eta'(r0).
/// Closed-form log models only (H2, H3, E2).
pub fn normal_coord_partials(v: &GeodesicVariation) -> Result<PartialsReport> {
    if v.model == ModelId::SPinch {
        return Err(Error::UnsupportedModel(
            ModelId::SPinch,
            "normal-coordinate route needs a closed-form log map",
        ));
    }
    let p = v.base();
    let basis = models::tangent_basis(&p);
    let components = |vec: &TangentVec| -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, b) in basis.iter().enumerate() {
            out[i] = metric_inner(&p, vec, b).unwrap();
        }
        out
    };
    let mut err: Option<Error> = None;
    let mut curve = |s: f64| -> [f64; 3] {
        match v.gamma.point_at(s).and_then(|q| log_map(&p, &q)) {
            Ok(lg) => components(&lg),
            Err(e) => {
                if err.is_none() {
                    err = Some(e);
                }
                [f64::NAN; 3]
            }
        }
    };
    let x0 = curve(v.s0);
    let xd = fd::curve_derivative(&mut curve, v.s0, 1, v.cfg.fd.coord_h1, v.cfg.fd.richardson);
    let xdd = fd::curve_derivative(&mut curve, v.s0, 2, v.cfg.fd.coord_h2, v.cfg.fd.richardson);
    if let Some(e) = err {
        return Err(e);
    }
    let eta_dot = v.eta.velocity_at(v.r0)?;
    let y = components(&eta_dot);

    let nx = dot3(&x0, &x0).sqrt();
    let xhat = [x0[0] / nx, x0[1] / nx, x0[2] / nx];
    let mut rep = PartialsReport::empty(Route::NormalCoords);
    rep.phi = nx;
    rep.d_r = -dot3(&xhat, &y);
    rep.d_s = dot3(&xd, &xhat);
    let xd_y = dot3(&xd, &y);
    let xd_xhat = dot3(&xd, &xhat);
    let y_xhat = dot3(&y, &xhat);
    rep.d2_rs = -(xd_y - xd_xhat * y_xhat) / nx;
    let xdd_y = dot3(&xdd, &y);
    let xdd_xhat = dot3(&xdd, &xhat);
    let d3 = -(xdd_y - xdd_xhat * y_xhat) / nx
        + 2.0 * xd_xhat / (nx * nx) * (xd_y - y_xhat * xd_xhat)
        + y_xhat / (nx * nx) * (dot3(&xd, &xd) - xd_xhat * xd_xhat);
    rep.d3_rss = Some(d3);
    Ok(rep)
}

/// Constant-curvature closed forms (H2/H3):
/// d2_rr = |eta'_perp|^2 coth(rho0), d2_ss = |gamma'_perp|^2 coth(rho0),
/// d2_rs = -csch(rho0) <eta'_perp, Q_0> |gamma'_perp| with Q_t the
/// transported unit normal carrying W_perp.
pub fn closed_form_partials(v: &GeodesicVariation) -> Result<PartialsReport> {
    if !matches!(v.model, ModelId::H2 | ModelId::H3) {
        return Err(Error::UnsupportedModel(v.model, "closed forms hold in constant curvature -1"));
    }
    let p = v.base();
    let rho = v.rho0;
    let eta_dot = v.eta.velocity_at(v.r0)?;
    let (_, eta_perp) = decompose_against(&v.sigma, 0.0, &eta_dot)?;
    let gamma_dot = v.gamma.velocity_at(v.s0)?;
    let (_, gamma_perp) = decompose_against(&v.sigma, v.rho0, &gamma_dot)?;
    let coth = rho.cosh() / rho.sinh();
    let mut rep = PartialsReport::empty(Route::HyperbolicClosedForm);
    rep.phi = rho;
    let (d_r, d_s) = phi_first_partials(v)?;
    rep.d_r = d_r;
    rep.d_s = d_s;
    rep.d2_rr = Some(eta_perp.norm().powi(2) * coth);
    rep.d2_ss = Some(gamma_perp.norm().powi(2) * coth);
    let g_norm = gamma_perp.norm();
    rep.d2_rs = if g_norm < 1e-300 {
        0.0
    } else {
        let q0 = models::parallel_transport(&v.sigma, &gamma_perp.scale(1.0 / g_norm), rho, 0.0)?;
        -metric_inner(&p, &eta_perp, &q0)? * g_norm / rho.sinh()
    };
    Ok(rep)
}

/// Central finite differences of phi(r, s) itself, with Richardson
/// extrapolation; the independent oracle for every other route. Computes
/// all partials up to `max_order` (2 <= max_order <= 4); orders 3 and 4
/// include the derivatives of d2_rs phi needed for its C^2 norm.
pub fn fd_partials(
    cfg: &VariationConfig,
    eta: &Geodesic,
    gamma: &Geodesic,
    r0: f64,
    s0: f64,
    max_order: usize,
) -> Result<PartialsReport> {
    if !(2..=4).contains(&max_order) {
        return Err(Error::Config(format!("fd_partials max_order {max_order} not in 2..=4")));
    }
    let mut phi = PhiEval::new(eta, gamma, cfg.pinch);
    let mut rep = PartialsReport::empty(Route::FiniteDiff);
    let mut diag_max = 0.0f64;
    {
        let mut f = |r: f64, s: f64| phi.eval(r, s);
        rep.phi = f(r0, s0);
        let mut take = |kr: usize, ks: usize, diag_max: &mut f64| -> f64 {
            let (val, d) = fd::partial_with_diag(&mut f, r0, s0, kr, ks, &cfg.fd);
            let rel = d / val.abs().max(1e-12);
            *diag_max = diag_max.max(rel);
            val
        };
        rep.d_r = take(1, 0, &mut diag_max);
        rep.d_s = take(0, 1, &mut diag_max);
        rep.d2_rs = take(1, 1, &mut diag_max);
        rep.d2_rr = Some(take(2, 0, &mut diag_max));
        rep.d2_ss = Some(take(0, 2, &mut diag_max));
        if max_order >= 3 {
            rep.d3_rss = Some(take(1, 2, &mut diag_max));
            rep.higher.push(("d3_rrr".into(), take(3, 0, &mut diag_max)));
            rep.higher.push(("d3_rrs".into(), take(2, 1, &mut diag_max)));
            rep.higher.push(("d3_sss".into(), take(0, 3, &mut diag_max)));
        }
        if max_order >= 4 {
            rep.higher.push(("d4_rrrr".into(), take(4, 0, &mut diag_max)));
            rep.higher.push(("d4_rrrs".into(), take(3, 1, &mut diag_max)));
            rep.higher.push(("d4_rrss".into(), take(2, 2, &mut diag_max)));
            rep.higher.push(("d4_rsss".into(), take(1, 3, &mut diag_max)));
            rep.higher.push(("d4_ssss".into(), take(0, 4, &mut diag_max)));
        }
    }
    if let Some(e) = phi.error {
        return Err(e);
    }
    rep.fd_diagnostic = diag_max;
    Ok(rep)
}

/// Sum of |d^alpha phi| over all multi-indices with |alpha| = k, from a
/// finite-difference report (k in 2..=4).
pub fn partial_sum_of_order(rep: &PartialsReport, k: usize) -> Option<f64> {
    match k {
        2 => Some(rep.d2_rs.abs() + rep.d2_rr?.abs() + rep.d2_ss?.abs()),
        3 => Some(
            rep.d3_rss?.abs()
                + rep.higher_get("d3_rrr")?.abs()
                + rep.higher_get("d3_rrs")?.abs()
                + rep.higher_get("d3_sss")?.abs(),
        ),
        4 => Some(
            rep.higher_get("d4_rrrr")?.abs()
                + rep.higher_get("d4_rrrs")?.abs()
                + rep.higher_get("d4_rrss")?.abs()
                + rep.higher_get("d4_rsss")?.abs()
                + rep.higher_get("d4_ssss")?.abs(),
        ),
        _ => None,
    }
}

/// C^2-type norm of d2_rs phi from a max_order = 4 report: the sum of
/// |d^beta (d2_rs phi)| over |beta| <= 2. Used as the A input of the
/// oscillatory decay bound.
pub fn d2rs_c2_norm(rep: &PartialsReport) -> Option<f64> {
    Some(
        rep.d2_rs.abs()
            + rep.higher_get("d3_rrs")?.abs()
            + rep.d3_rss?.abs()
            + rep.higher_get("d4_rrrs")?.abs()
            + rep.higher_get("d4_rrss")?.abs()
            + rep.higher_get("d4_rsss")?.abs(),
    )
}
