//! Batch verification scans over sampled configurations: the 2-D
//! mixed-partial dichotomy, the 3-D coplanarity identity, near-critical
//! isolation, and derivative growth in the separation.
//!
//! Scans are parallel over configurations; records are collected in index
//! order and aggregates are order-independent, so output is identical for
//! any thread count at a fixed seed.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobi::decompose_against;
use crate::models::{
    self, angle, grad_distance, log_map, metric_inner, Geodesic, ModelId, Point, TangentVec,
};
use crate::sampler::{sample_config, EtaAngle, SamplerSpec};
use crate::variation::{
    build_variation, fd_partials, partial_sum_of_order, phi_first_partials, s_acceleration,
    second_variation, second_variation_rr_ss, third_variation_with_accel, VariationConfig,
};

fn min_pm_angle(a: f64) -> f64 {
    a.min(std::f64::consts::PI - a)
}

/// Least-squares line fit; returns (slope, intercept, max |residual|).
pub fn line_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let resid = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).abs())
        .fold(0.0, f64::max);
    (slope, intercept, resid)
}

// ---------------------------------------------------------------------
// 2-D dichotomy scan
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Lemma2dConfig {
    pub model: ModelId,
    /// The scan horizon T: rho0 is drawn log-uniformly from [3, T] and the
    /// transversality floor for gamma is e^{-T}.
    pub t_scan: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub var: VariationConfig,
}

impl Lemma2dConfig {
    pub fn new(model: ModelId, t_scan: f64, n_samples: usize, seed: u64) -> Self {
        Lemma2dConfig { model, t_scan, n_samples, seed, var: VariationConfig::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma2dRecord {
    pub config_id: u64,
    pub rho0: f64,
    pub d2_rs: f64,
    pub d3_rss: f64,
    /// Angle of eta'(r0) to +-sigma'(0).
    pub angle_eta: f64,
    /// Angle of gamma'(s0) to +-sigma'(rho0).
    pub angle_gamma: f64,
    /// min(-ln|d2_rs|, -ln|d3_rss|) / T: the exponent this sample needs.
    pub exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma2dReport {
    pub model: ModelId,
    pub t_scan: f64,
    pub seed: u64,
    pub n: usize,
    /// Smallest C such that max(|d2_rs|, |d3_rss|) >= e^{-C T} over the
    /// whole sample.
    pub calibrated_exponent: f64,
    /// Worst max(|d2_rs|, |d3_rss|) and its configuration.
    pub min_max_partial: f64,
    pub witness_dichotomy: u64,
    /// Smallest |d2_rs| and |d3_rss| with their configurations.
    pub min_d2: f64,
    pub witness_d2: u64,
    pub min_d3: f64,
    pub witness_d3: u64,
    /// Configurations violating max(...) >= e^{-10 T}.
    pub violations: Vec<u64>,
    pub records: Vec<Lemma2dRecord>,
}

/// Dichotomy scan: samples transverse configurations and records both
/// mixed partials; the dichotomy says at least one of them is bounded
/// below by a uniform negative exponential of T.
pub fn lemma2d_scan(cfg: &Lemma2dConfig) -> Result<Lemma2dReport> {
    if !matches!(cfg.model, ModelId::H2 | ModelId::SPinch) {
        return Err(Error::Config(format!(
            "lemma2d scan runs on H2 or S_pinch, got {:?}",
            cfg.model
        )));
    }
    let mut spec = SamplerSpec::new(cfg.model);
    spec.rho_min = 3.0;
    spec.rho_max = if cfg.model == ModelId::SPinch { cfg.t_scan.min(8.0) } else { cfg.t_scan };
    spec.gamma_angle_min = (-cfg.t_scan).exp();
    // Exercise both dichotomy branches: radial, near-radial, generic.
    spec.eta_angle = EtaAngle::Mixture { p_radial: 0.1, p_tiny: 0.1, tiny_scale: 1e-4 };
    spec.pinch = cfg.var.pinch;

    let records: Vec<Lemma2dRecord> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|i| -> Result<Lemma2dRecord> {
            let sc = sample_config(&spec, cfg.seed, i)?;
            let v = build_variation(&cfg.var, &sc.eta, &sc.gamma, sc.r0, sc.s0)?;
            let d2 = second_variation(&v)?;
            let (accel, _) = s_acceleration(&v)?;
            let d3 = third_variation_with_accel(&v, &accel)?;
            let a_eta = min_pm_angle(angle(
                &v.eta.velocity_at(sc.r0)?,
                &v.sigma.unit_velocity_at(0.0)?,
            )?);
            let a_gamma = min_pm_angle(angle(
                &v.gamma.velocity_at(sc.s0)?,
                &v.sigma.unit_velocity_at(v.rho0)?,
            )?);
            let exponent = (-d2.abs().max(1e-300).ln())
                .min(-d3.abs().max(1e-300).ln())
                .max(0.0)
                / cfg.t_scan;
            Ok(Lemma2dRecord {
                config_id: i,
                rho0: v.rho0,
                d2_rs: d2,
                d3_rss: d3,
                angle_eta: a_eta,
                angle_gamma: a_gamma,
                exponent,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rep = Lemma2dReport {
        model: cfg.model,
        t_scan: cfg.t_scan,
        seed: cfg.seed,
        n: records.len(),
        calibrated_exponent: 0.0,
        min_max_partial: f64::INFINITY,
        witness_dichotomy: 0,
        min_d2: f64::INFINITY,
        witness_d2: 0,
        min_d3: f64::INFINITY,
        witness_d3: 0,
        violations: Vec::new(),
        records: Vec::new(),
    };
    let floor = (-10.0 * cfg.t_scan).exp();
    for r in &records {
        let m = r.d2_rs.abs().max(r.d3_rss.abs());
        if m < rep.min_max_partial {
            rep.min_max_partial = m;
            rep.witness_dichotomy = r.config_id;
        }
        if r.d2_rs.abs() < rep.min_d2 {
            rep.min_d2 = r.d2_rs.abs();
            rep.witness_d2 = r.config_id;
        }
        if r.d3_rss.abs() < rep.min_d3 {
            rep.min_d3 = r.d3_rss.abs();
            rep.witness_d3 = r.config_id;
        }
        rep.calibrated_exponent = rep.calibrated_exponent.max(r.exponent);
        if m < floor {
            rep.violations.push(r.config_id);
        }
    }
    rep.records = records;
    Ok(rep)
}

// ---------------------------------------------------------------------
// 3-D coplanarity check
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Lemma3dConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub var: VariationConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma3dRecord {
    pub config_id: u64,
    pub rho0: f64,
    /// Angle between (D_s^2 d_t Psi)_perp and D_t W0_perp (up to sign).
    pub coplanarity_angle: f64,
    /// Relative error of |<V0_perp, A_perp>| = |d2_rs| |A_perp| / |D_t W0_perp|.
    pub identity_rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma3dReport {
    pub seed: u64,
    pub n: usize,
    pub max_angle: f64,
    pub max_identity_rel_error: f64,
    pub records: Vec<Lemma3dRecord>,
}

/// In constant curvature -1 and dimension 3, the s-acceleration's normal
/// part is parallel to the normal direction Q_0 carrying D_t W0_perp
/// (everything stays in one totally geodesic plane), and the identity
/// |<V0_perp, A_perp>| = |d2_rs phi| |A_perp| / |D_t W0_perp| holds.
pub fn lemma3d_check(cfg: &Lemma3dConfig) -> Result<Lemma3dReport> {
    let mut spec = SamplerSpec::new(ModelId::H3);
    spec.rho_min = 3.0;
    spec.rho_max = 8.0;
    spec.gamma_angle_min = 0.1;
    spec.eta_angle = EtaAngle::Uniform { min: 0.1 };

    let records: Vec<Lemma3dRecord> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|i| -> Result<Lemma3dRecord> {
            let sc = sample_config(&spec, cfg.seed, i)?;
            let v = build_variation(&cfg.var, &sc.eta, &sc.gamma, sc.r0, sc.s0)?;
            let (accel, _) = s_acceleration(&v)?;
            let (_, a_perp) = decompose_against(&v.sigma, 0.0, &accel)?;
            let (_, dw0_perp) = decompose_against(&v.sigma, 0.0, &v.w.deriv0())?;
            let (_, v0_perp) = decompose_against(&v.sigma, 0.0, &v.v.value0())?;
            let ang = min_pm_angle(angle(&a_perp, &dw0_perp)?);
            let p = v.sigma.start();
            let lhs = metric_inner(&p, &v0_perp, &a_perp)?.abs();
            let rhs = second_variation(&v)?.abs() * a_perp.norm() / dw0_perp.norm();
            let rel = (lhs - rhs).abs() / lhs.max(rhs).max(1e-300);
            Ok(Lemma3dRecord {
                config_id: i,
                rho0: v.rho0,
                coplanarity_angle: ang,
                identity_rel_error: rel,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let max_angle = records.iter().map(|r| r.coplanarity_angle).fold(0.0, f64::max);
    let max_rel = records.iter().map(|r| r.identity_rel_error).fold(0.0, f64::max);
    Ok(Lemma3dReport {
        seed: cfg.seed,
        n: records.len(),
        max_angle,
        max_identity_rel_error: max_rel,
        records,
    })
}

// ---------------------------------------------------------------------
// Near-critical isolation
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct IsolationConfig {
    pub model: ModelId,
    pub n_samples: usize,
    pub seed: u64,
    /// Grid resolution per axis over [0, 1/4]^2.
    pub grid_n: usize,
    /// Separation rho0 of the common perpendicular; must satisfy
    /// sinh(phi) >= 64 over the square.
    pub rho0: f64,
    /// Horizon defining eps = e^{-4T} and delta = e^{-3T}.
    pub t_horizon: f64,
    pub var: VariationConfig,
}

impl IsolationConfig {
    pub fn new(model: ModelId, n_samples: usize, seed: u64) -> Self {
        IsolationConfig {
            model,
            n_samples,
            seed,
            grid_n: 100,
            rho0: 6.0,
            t_horizon: 5.0,
            var: VariationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IsolationRecord {
    pub config_id: u64,
    pub eps_measured: f64,
    pub grid_points_tested: usize,
    pub taylor_violations: usize,
    pub worst_margin: f64,
    pub min_eta_perp_sq: f64,
    pub min_sinh_phi: f64,
    pub max_coth_phi: f64,
    pub max_closed_form_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsolationReport {
    pub model: ModelId,
    pub seed: u64,
    pub n: usize,
    pub total_violations: usize,
    pub min_eta_perp_sq: f64,
    pub max_closed_form_err: f64,
    pub records: Vec<IsolationRecord>,
}

/// Near a joint near-critical point (r1, s1) of phi, the first partial
/// regrows linearly: |d_r phi(r, s)| >= |r - r1|/32 - eps on the part of
/// [0, 1/4]^2 where |r - r1| >= max(|s - s1|/2, delta). Verified on a
/// grid for perturbed common-perpendicular configurations, along with
/// |eta'_perp|^2 >= 1/16 and the closed form d2_rr = |eta'_perp|^2 coth.
pub fn isolation_check(cfg: &IsolationConfig) -> Result<IsolationReport> {
    if !matches!(cfg.model, ModelId::H2 | ModelId::H3) {
        return Err(Error::Config(format!(
            "isolation check runs on H2 or H3, got {:?}",
            cfg.model
        )));
    }
    let eps_hyp = (-4.0 * cfg.t_horizon).exp();
    let delta = (-3.0 * cfg.t_horizon).exp();

    let records: Vec<IsolationRecord> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|i| -> Result<IsolationRecord> {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i.wrapping_add(0x1501));
            let o = crate::sampler::origin(cfg.model);
            let u = crate::sampler::random_unit_tangent(&o, &mut rng);
            let sigma = Geodesic::from_velocity(u, cfg.rho0)?;
            let p = sigma.start();
            let q = sigma.point_at(cfg.rho0)?;
            // Common perpendicular feet inside [0, 1/4]^2.
            let r1 = 0.03 + 0.19 * rng.gen::<f64>();
            let s1 = 0.03 + 0.19 * rng.gen::<f64>();
            // Perpendicular directions, tilted by up to eps to make the
            // critical point near-critical rather than exact.
            let normals_p = models::normal_basis_at(&p, &sigma.unit_velocity_at(0.0)?);
            let normals_q = models::normal_basis_at(&q, &sigma.unit_velocity_at(cfg.rho0)?);
            let pick = |ns: &[TangentVec], rng: &mut rand_chacha::ChaCha8Rng| -> TangentVec {
                if ns.len() == 1 {
                    ns[0]
                } else {
                    let psi = rng.gen::<f64>() * std::f64::consts::TAU;
                    ns[0].scale(psi.cos()).add(&ns[1].scale(psi.sin()))
                }
            };
            let tilt_eta = eps_hyp * rng.gen::<f64>();
            let tilt_gamma = eps_hyp * rng.gen::<f64>();
            let eta_dir = pick(&normals_p, &mut rng)
                .scale(tilt_eta.cos())
                .add(&sigma.unit_velocity_at(0.0)?.scale(tilt_eta.sin()));
            let gamma_dir = pick(&normals_q, &mut rng)
                .scale(tilt_gamma.cos())
                .add(&sigma.unit_velocity_at(cfg.rho0)?.scale(tilt_gamma.sin()));
            let eta = Geodesic::through(&p, &eta_dir, r1, 1.0)?;
            let gamma = Geodesic::through(&q, &gamma_dir, s1, 1.0)?;

            // d_r phi(r, s) = <grad_1 d(eta(r), gamma(s)), eta'(r)>.
            let d_r_phi = |r: f64, s: f64| -> Result<(f64, f64)> {
                let a = eta.point_at(r)?;
                let b = gamma.point_at(s)?;
                let g = grad_distance(&a, &b)?;
                let phi = log_map(&a, &b)?.norm();
                Ok((metric_inner(&a, &g, &eta.velocity_at(r)?)?, phi))
            };
            let (eps_measured, _) = d_r_phi(r1, s1)?;
            let eps_measured = eps_measured.abs();

            let mut rec = IsolationRecord {
                config_id: i,
                eps_measured,
                grid_points_tested: 0,
                taylor_violations: 0,
                worst_margin: f64::INFINITY,
                min_eta_perp_sq: f64::INFINITY,
                min_sinh_phi: f64::INFINITY,
                max_coth_phi: 0.0,
                max_closed_form_err: 0.0,
            };
            let n = cfg.grid_n;
            for a in 0..n {
                for b in 0..n {
                    let r = 0.25 * a as f64 / (n - 1) as f64;
                    let s = 0.25 * b as f64 / (n - 1) as f64;
                    if (r - r1).abs() < (0.5 * (s - s1).abs()).max(delta) {
                        continue;
                    }
                    let (dr, phi) = d_r_phi(r, s)?;
                    rec.grid_points_tested += 1;
                    rec.min_sinh_phi = rec.min_sinh_phi.min(phi.sinh());
                    rec.max_coth_phi = rec.max_coth_phi.max(phi.cosh() / phi.sinh());
                    let bound = (r - r1).abs() / 32.0 - eps_measured.max(eps_hyp);
                    let margin = dr.abs() - bound;
                    rec.worst_margin = rec.worst_margin.min(margin);
                    if margin < -1e-12 {
                        rec.taylor_violations += 1;
                    }
                    let eta_perp_sq = 1.0 - dr * dr;
                    rec.min_eta_perp_sq = rec.min_eta_perp_sq.min(eta_perp_sq);
                }
            }

            // Closed-form d2_rr = |eta'_perp|^2 coth(phi) at sample points.
            let mut closed_err = 0.0f64;
            for k in 0..10 {
                let r = 0.02 + 0.21 * (k as f64 / 9.0);
                for l in 0..10 {
                    let s = 0.02 + 0.21 * (l as f64 / 9.0);
                    let v = build_variation(&cfg.var, &eta, &gamma, r, s)?;
                    let (d2_rr, _) = second_variation_rr_ss(&v)?;
                    let (dr, _) = phi_first_partials(&v)?;
                    let expect = (1.0 - dr * dr) * v.rho0.cosh() / v.rho0.sinh();
                    closed_err = closed_err.max((d2_rr - expect).abs());
                }
            }
            rec.max_closed_form_err = closed_err;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;

    let total_violations = records.iter().map(|r| r.taylor_violations).sum();
    let min_eta = records.iter().map(|r| r.min_eta_perp_sq).fold(f64::INFINITY, f64::min);
    let max_cf = records.iter().map(|r| r.max_closed_form_err).fold(0.0, f64::max);
    Ok(IsolationReport {
        model: cfg.model,
        seed: cfg.seed,
        n: records.len(),
        total_violations,
        min_eta_perp_sq: min_eta,
        max_closed_form_err: max_cf,
        records,
    })
}

// ---------------------------------------------------------------------
// Derivative growth scan
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GrowthConfig {
    pub model: ModelId,
    pub rho_list: Vec<f64>,
    pub samples_per_rho: usize,
    pub max_order: usize,
    pub seed: u64,
    pub var: VariationConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthFit {
    pub order: usize,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// (rho0, ln max sum |d^alpha phi|) points behind the fit.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub model: ModelId,
    pub seed: u64,
    pub fits: Vec<GrowthFit>,
}

/// For each separation rho0 in the list, samples configurations and
/// records the max over samples of sum_{|alpha| = k} |d^alpha phi| for
/// k = 2..max_order, then fits ln(max) against rho0. Bounded slopes
/// verify the exponential growth bound; flat or negative slopes are the
/// constant-curvature behavior.
pub fn growth_scan(cfg: &GrowthConfig) -> Result<GrowthReport> {
    if !(2..=4).contains(&cfg.max_order) {
        return Err(Error::Config(format!("growth max_order {} not in 2..=4", cfg.max_order)));
    }
    let per_rho: Vec<Vec<Vec<f64>>> = cfg
        .rho_list
        .par_iter()
        .map(|&rho| -> Result<Vec<Vec<f64>>> {
            let mut spec = SamplerSpec::new(cfg.model);
            spec.rho_min = rho;
            spec.rho_max = rho;
            spec.gamma_angle_min = 0.2;
            spec.eta_angle = EtaAngle::Uniform { min: 0.2 };
            spec.pinch = cfg.var.pinch;
            let mut sums = vec![Vec::new(); cfg.max_order + 1];
            for i in 0..cfg.samples_per_rho as u64 {
                let sc = sample_config(&spec, cfg.seed ^ rho.to_bits(), i)?;
                let rep = fd_partials(&cfg.var, &sc.eta, &sc.gamma, sc.r0, sc.s0, cfg.max_order)?;
                for k in 2..=cfg.max_order {
                    if let Some(sum) = partial_sum_of_order(&rep, k) {
                        sums[k].push(sum);
                    }
                }
            }
            Ok(sums)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fits = Vec::new();
    for k in 2..=cfg.max_order {
        let points: Vec<(f64, f64)> = cfg
            .rho_list
            .iter()
            .zip(&per_rho)
            .map(|(&rho, sums)| {
                let max = sums[k].iter().fold(0.0f64, |m, &v| m.max(v));
                (rho, max.max(1e-300).ln())
            })
            .collect();
        let (slope, intercept, max_residual) = line_fit(&points);
        fits.push(GrowthFit { order: k, slope, intercept, max_residual, points });
    }
    Ok(GrowthReport { model: cfg.model, seed: cfg.seed, fits })
}

// ---------------------------------------------------------------------

/// Closed-form H2 dichotomy witnesses used by tests and the CLI summary.
pub fn h2_doubly_perpendicular_d2(rho: f64) -> f64 {
    1.0 / rho.sinh()
}
