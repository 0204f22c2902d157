use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::models::{exp_map, tangent_basis, PinchParams};

fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (|diff| = {:.3e})", (a - b).abs());
}

fn h2_geodesic(len: f64) -> Geodesic {
    let p = Point::new(ModelId::H2, &[0.0, 0.0, 1.0]).unwrap();
    let dir = TangentVec::new(p, &[1.0, 0.0, 0.0]).unwrap();
    Geodesic::from_velocity(dir, len).unwrap()
}

fn e2_geodesic(len: f64) -> Geodesic {
    let p = Point::new(ModelId::E2, &[0.0, 0.0]).unwrap();
    let dir = TangentVec::new(p, &[1.0, 0.0]).unwrap();
    Geodesic::from_velocity(dir, len).unwrap()
}

fn spinch_geodesic(len: f64) -> Geodesic {
    let p = Point::new(ModelId::SPinch, &[0.1, -0.2]).unwrap();
    let dir = TangentVec::new(p, &[0.8, 0.6]).unwrap().normalized().unwrap();
    Geodesic::from_velocity(dir, len).unwrap()
}

fn unit_normal0(geo: &Geodesic) -> TangentVec {
    let u = geo.unit_velocity_at(0.0).unwrap();
    normal_basis(&geo.start(), &u)[0]
}

#[test]
fn ivp_flat_linear_growth() {
    let geo = e2_geodesic(5.0);
    let n = unit_normal0(&geo);
    let (x, _) = jacobi_ivp(&geo, &TangentVec::zero(geo.start()), &n, 3.0).unwrap();
    assert_close(x.norm(), 3.0, 1e-12, "flat field t*z");
}

#[test]
fn ivp_hyperbolic_sinh_growth() {
    let geo = h2_geodesic(5.0);
    let n = unit_normal0(&geo);
    let (x, _) = jacobi_ivp(&geo, &TangentVec::zero(geo.start()), &n, 3.0).unwrap();
    assert_close(x.norm(), (3.0f64).sinh(), 1e-10, "sinh growth");
}

#[test]
fn ivp_spinch_step_halving() {
    let params = PinchParams::default();
    let fine = PinchParams { step: params.step / 2.0, ..params };
    let p = Point::new(ModelId::SPinch, &[0.1, -0.2]).unwrap();
    let dir = TangentVec::new(p, &[0.8, 0.6]).unwrap().normalized().unwrap();
    let geo = Geodesic::from_velocity_with(&params, dir, 6.0).unwrap();
    let geo_fine = Geodesic::from_velocity_with(&fine, dir, 6.0).unwrap();
    let n = unit_normal0(&geo);
    let nf = unit_normal0(&geo_fine);
    let (x, d) = jacobi_ivp(&geo, &TangentVec::zero(p), &n, 6.0).unwrap();
    let (xf, df) = jacobi_ivp(&geo_fine, &TangentVec::zero(p), &nf, 6.0).unwrap();
    assert_close(x.norm(), xf.norm(), 1e-8, "field vs halved step");
    assert_close(d.norm(), df.norm(), 1e-8, "derivative vs halved step");
}

#[test]
fn bvp_hyperbolic_csch_derivative() {
    let rho = 3.0;
    let geo = h2_geodesic(rho);
    let n_end = {
        let u = geo.unit_velocity_at(rho).unwrap();
        normal_basis(&geo.point_at(rho).unwrap(), &u)[0]
    };
    let field = jacobi_bvp(&geo, &TangentVec::zero(geo.start()), &n_end).unwrap();
    let expected = 1.0 / rho.sinh(); // csch 3 ~ 0.0998215696688
    assert_close(field.deriv0().norm(), expected, 1e-12, "csch(rho_0)");
    // Endpoints reproduced.
    let (x0, _) = field.eval(0.0).unwrap();
    let (x1, _) = field.eval(rho).unwrap();
    assert!(x0.norm() < 1e-12);
    assert_close(x1.norm(), 1.0, 1e-10, "endpoint value");
}

#[test]
fn bvp_flat_linear_derivative() {
    let rho = 3.0;
    let geo = e2_geodesic(rho);
    let n_end = {
        let u = geo.unit_velocity_at(rho).unwrap();
        normal_basis(&geo.point_at(rho).unwrap(), &u)[0]
    };
    let field = jacobi_bvp(&geo, &TangentVec::zero(geo.start()), &n_end).unwrap();
    assert_close(field.deriv0().norm(), 1.0 / 3.0, 1e-14, "1/rho_0");
}

#[test]
fn bvp_tangential_linearity() {
    let rho = 3.0;
    for geo in [h2_geodesic(rho), e2_geodesic(rho)] {
        let end_vel = geo.unit_velocity_at(rho).unwrap();
        let field = jacobi_bvp(&geo, &TangentVec::zero(geo.start()), &end_vel).unwrap();
        let u0 = geo.unit_velocity_at(0.0).unwrap();
        let d = metric_inner(&geo.start(), &field.deriv0(), &u0).unwrap();
        assert_close(d, 1.0 / rho, 1e-13, "<D_t W_0, sigma'_0> = 1/rho_0");
    }
}

#[test]
fn decompose_velocity_field_has_no_normal_part() {
    let geo = h2_geodesic(4.0);
    let v0 = geo.velocity();
    let field = JacobiField::ivp(&geo, &v0, &TangentVec::zero(geo.start())).unwrap();
    for &t in &[0.5, 1.5, 3.9] {
        let (_, normal) = normal_decompose(&field, t).unwrap();
        assert!(normal.norm() < 1e-12);
    }
}

#[test]
fn decompose_normal_endpoints_stay_normal() {
    let rho = 3.0;
    let geo = h2_geodesic(rho);
    let n_end = {
        let u = geo.unit_velocity_at(rho).unwrap();
        normal_basis(&geo.point_at(rho).unwrap(), &u)[0]
    };
    let field = jacobi_bvp(&geo, &TangentVec::zero(geo.start()), &n_end).unwrap();
    for j in 0..20 {
        let t = rho * j as f64 / 19.0;
        let (tang, _) = normal_decompose(&field, t).unwrap();
        assert!(tang.norm() <= 1e-10, "tangential leak {}", tang.norm());
    }
}

#[test]
fn decompose_pythagoras() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let geo = h2_geodesic(4.0);
    let basis = tangent_basis(&geo.start());
    for _ in 0..20 {
        let x0 = basis[0]
            .scale(rng.gen::<f64>() - 0.5)
            .add(&basis[1].scale(rng.gen::<f64>() - 0.5));
        let d0 = basis[0]
            .scale(rng.gen::<f64>() - 0.5)
            .add(&basis[1].scale(rng.gen::<f64>() - 0.5));
        let field = JacobiField::ivp(&geo, &x0, &d0).unwrap();
        let t = rng.gen::<f64>() * 4.0;
        let (x, _) = field.eval(t).unwrap();
        let (tang, norm) = normal_decompose(&field, t).unwrap();
        let lhs = x.norm().powi(2);
        let rhs = tang.norm().powi(2) + norm.norm().powi(2);
        assert_close(lhs, rhs, 1e-12 * (1.0 + lhs), "Pythagoras");
        let recon = tang.add(&norm);
        for (a, b) in recon.as_slice().iter().zip(x.as_slice()) {
            assert_close(*a, *b, 1e-12, "reconstruction");
        }
    }
}

#[test]
fn nonhomog_reduces_to_homogeneous() {
    for geo in [h2_geodesic(4.0), e2_geodesic(4.0), spinch_geodesic(4.0)] {
        let n = unit_normal0(&geo);
        let zero_source = |t: f64| TangentVec::zero(geo.point_at(t).unwrap());
        let (x_ode, d_ode) =
            nonhomog_jacobi_ivp(&geo, &TangentVec::zero(geo.start()), &n, &zero_source, 4.0, 1e-3)
                .unwrap();
        let (x_cf, d_cf) = jacobi_ivp(&geo, &TangentVec::zero(geo.start()), &n, 4.0).unwrap();
        assert_close(x_ode.norm(), x_cf.norm(), 1e-10 * (1.0 + x_cf.norm()), "S=0 value");
        assert_close(d_ode.norm(), d_cf.norm(), 1e-10 * (1.0 + d_cf.norm()), "S=0 derivative");
    }
}

#[test]
fn nonhomog_flat_constant_source() {
    // x'' = -c with zero data: X_t = -(t^2/2) c.
    let geo = e2_geodesic(4.0);
    let n = unit_normal0(&geo);
    let src = |t: f64| {
        let base = geo.point_at(t).unwrap();
        TangentVec::new(base, n.as_slice()).unwrap()
    };
    let t = 3.0;
    let (x, _) = nonhomog_jacobi_ivp(
        &geo,
        &TangentVec::zero(geo.start()),
        &TangentVec::zero(geo.start()),
        &src,
        t,
        1e-3,
    )
    .unwrap();
    assert_close(x.norm(), t * t / 2.0, 1e-10, "double integration");
    let c = metric_inner(&geo.point_at(t).unwrap(), &x, &geo.unit_velocity_at(t).unwrap()).unwrap();
    assert!(c.abs() < 1e-12, "stays normal");
}

#[test]
fn nonhomog_hyperbolic_parallel_source() {
    // Normal component with K = -1 and unit source: x'' = x - 1,
    // x(0) = x'(0) = 0, so x(t) = 1 - cosh t and |X_1| = cosh(1) - 1.
    let geo = h2_geodesic(2.0);
    let n = unit_normal0(&geo);
    let src = |t: f64| parallel_transport(&geo, &n, 0.0, t).unwrap();
    let (x, _) = nonhomog_jacobi_ivp(
        &geo,
        &TangentVec::zero(geo.start()),
        &TangentVec::zero(geo.start()),
        &src,
        1.0,
        1e-3,
    )
    .unwrap();
    assert_close(x.norm(), (1.0f64).cosh() - 1.0, 1e-10, "cosh(1) - 1");
}

#[test]
fn rauch_equality_branches() {
    // Flat: lower bound is an equality.
    let geo = e2_geodesic(8.0);
    let n = unit_normal0(&geo);
    let rep = rauch_check(&geo, &n, 8.0, 100).unwrap();
    assert!(rep.max_lower_violation <= 1e-10);
    assert!(rep.max_upper_violation <= 0.0 + 1e-12);
    assert_close(rep.worst_ratio_lower, 1.0, 1e-10, "flat lower tight");

    // Constant -1: upper bound is an equality.
    let geo = h2_geodesic(8.0);
    let n = unit_normal0(&geo);
    let rep = rauch_check(&geo, &n, 8.0, 100).unwrap();
    assert!(rep.max_upper_violation <= 1e-8);
    assert_close(rep.worst_ratio_upper, 1.0, 1e-8, "hyperbolic upper tight");
}

#[test]
fn rauch_spinch_strictly_sandwiched() {
    let geo = spinch_geodesic(8.0);
    let n = unit_normal0(&geo);
    let rep = rauch_check(&geo, &n, 8.0, 200).unwrap();
    assert!(rep.max_lower_violation <= 1e-8, "lower violation {}", rep.max_lower_violation);
    assert!(rep.max_upper_violation <= 1e-8, "upper violation {}", rep.max_upper_violation);
}

#[test]
fn rauch_rejects_tangential_derivative() {
    let geo = h2_geodesic(2.0);
    let v = geo.velocity();
    assert!(rauch_check(&geo, &v, 2.0, 10).is_err());
}

#[test]
fn tangential_derivative_inner_product_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for geo in [h2_geodesic(6.0), spinch_geodesic(6.0)] {
        let basis = tangent_basis(&geo.start());
        for _ in 0..10 {
            let mut x0 = TangentVec::zero(geo.start());
            let mut d0 = TangentVec::zero(geo.start());
            for b in &basis {
                x0 = x0.add(&b.scale(rng.gen::<f64>() - 0.5));
                d0 = d0.add(&b.scale(rng.gen::<f64>() - 0.5));
            }
            let field = JacobiField::ivp(&geo, &x0, &d0).unwrap();
            let c0 = metric_inner(&geo.start(), &d0, &geo.unit_velocity_at(0.0).unwrap()).unwrap();
            for j in 1..6 {
                let t = 6.0 * j as f64 / 6.0;
                let (_, d) = field.eval(t).unwrap();
                let c =
                    metric_inner(&geo.point_at(t).unwrap(), &d, &geo.unit_velocity_at(t).unwrap())
                        .unwrap();
                assert_close(c, c0, 1e-8, "<D_t X, sigma'> constant");
            }
        }
    }
}

#[test]
fn bvp_additive_in_boundary_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let rho = 4.0;
    let geo = h2_geodesic(rho);
    let b0 = tangent_basis(&geo.start());
    let b1 = tangent_basis(&geo.point_at(rho).unwrap());
    for _ in 0..10 {
        let xs1 = b0[0].scale(rng.gen::<f64>() - 0.5).add(&b0[1].scale(rng.gen::<f64>() - 0.5));
        let xe1 = b1[0].scale(rng.gen::<f64>() - 0.5).add(&b1[1].scale(rng.gen::<f64>() - 0.5));
        let xs2 = b0[0].scale(rng.gen::<f64>() - 0.5).add(&b0[1].scale(rng.gen::<f64>() - 0.5));
        let xe2 = b1[0].scale(rng.gen::<f64>() - 0.5).add(&b1[1].scale(rng.gen::<f64>() - 0.5));
        let f1 = jacobi_bvp(&geo, &xs1, &xe1).unwrap();
        let f2 = jacobi_bvp(&geo, &xs2, &xe2).unwrap();
        let fsum = jacobi_bvp(&geo, &xs1.add(&xs2), &xe1.add(&xe2)).unwrap();
        let t = rho * rng.gen::<f64>();
        let (v1, _) = f1.eval(t).unwrap();
        let (v2, _) = f2.eval(t).unwrap();
        let (vs, _) = fsum.eval(t).unwrap();
        for ((a, b), c) in v1.as_slice().iter().zip(v2.as_slice()).zip(vs.as_slice()) {
            assert_close(a + b, *c, 1e-10, "BVP additivity");
        }
    }
}

#[test]
fn closed_form_matches_ode_to_t10() {
    for geo in [h2_geodesic(10.0), e2_geodesic(10.0)] {
        let n = unit_normal0(&geo);
        let x0 = n.scale(0.3);
        let d0 = n.scale(-0.7).add(&geo.velocity().scale(0.2));
        let zero_source = |t: f64| TangentVec::zero(geo.point_at(t).unwrap());
        for &t in &[2.0, 5.0, 10.0] {
            let (xc, dc) = jacobi_ivp(&geo, &x0, &d0, t).unwrap();
            let (xo, do_) = nonhomog_jacobi_ivp(&geo, &x0, &d0, &zero_source, t, 1e-3).unwrap();
            let scale = 1.0 + xc.norm();
            assert!((xc.norm() - xo.norm()).abs() <= 1e-8 * scale, "value at t={t}");
            assert!((dc.norm() - do_.norm()).abs() <= 1e-8 * scale, "derivative at t={t}");
        }
    }
}
