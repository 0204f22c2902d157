use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::models::pinch;

fn h2_origin() -> Point {
    Point::new(ModelId::H2, &[0.0, 0.0, 1.0]).unwrap()
}

fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (|diff| = {:.3e})", (a - b).abs());
}


fn coord_residual(a: &Point, b: &Point) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn metric_inner_e2_orthonormal() {
    let p = Point::new(ModelId::E2, &[0.3, -0.7]).unwrap();
    let x = TangentVec::new(p, &[1.0, 0.0]).unwrap();
    let y = TangentVec::new(p, &[0.0, 1.0]).unwrap();
    assert_eq!(metric_inner(&p, &x, &y).unwrap(), 0.0);
}

#[test]
fn metric_inner_h2_at_origin() {
    let p = h2_origin();
    let x = TangentVec::new(p, &[1.0, 0.0, 0.0]).unwrap();
    assert_eq!(metric_inner(&p, &x, &x).unwrap(), 1.0);
}

#[test]
fn metric_inner_spinch_conformal_factor() {
    // e^{2u} with u = (x^2+y^2)/4 at (1, 0): e^{1/2}.
    let p = Point::new(ModelId::SPinch, &[1.0, 0.0]).unwrap();
    let x = TangentVec::new(p, &[1.0, 0.0]).unwrap();
    assert_close(metric_inner(&p, &x, &x).unwrap(), (0.5f64).exp(), 1e-14, "conformal factor");
}

#[test]
fn metric_inner_rejects_model_mixing() {
    let p = h2_origin();
    let q = Point::new(ModelId::E2, &[0.0, 0.0]).unwrap();
    let x = TangentVec::new(p, &[1.0, 0.0, 0.0]).unwrap();
    let y = TangentVec::new(q, &[1.0, 0.0]).unwrap();
    assert!(matches!(metric_inner(&p, &x, &y), Err(Error::ModelMismatch(_, _))));
}

#[test]
fn tangent_rejects_non_tangent_on_hyperboloid() {
    let p = h2_origin();
    assert!(matches!(
        TangentVec::new(p, &[0.0, 0.0, 1.0]),
        Err(Error::NotTangent(_))
    ));
}

#[test]
fn distance_h2_closed_form() {
    let p = h2_origin();
    let q = Point::new(ModelId::H2, &[(1.0f64).sinh(), 0.0, (1.0f64).cosh()]).unwrap();
    assert_close(distance(&p, &q).unwrap(), 1.0, 1e-13, "arccosh(cosh 1)");
    assert_eq!(distance(&p, &p).unwrap(), 0.0);
}

#[test]
fn distance_spinch_matches_integrated_length_and_halved_step() {
    let params = PinchParams::default();
    let p = Point::new(ModelId::SPinch, &[0.0, 0.0]).unwrap();
    let q = Point::new(ModelId::SPinch, &[1.0, 0.0]).unwrap();
    let d = distance_with(&params, &p, &q).unwrap();

    // Oracle 1: same solve at halved step.
    let fine = PinchParams { step: params.step / 2.0, ..params };
    let d_fine = distance_with(&fine, &p, &q).unwrap();
    assert_close(d, d_fine, 1e-8, "distance vs halved step");

    // Oracle 2: Simpson quadrature of |xdot|_g along the solved geodesic.
    let geo = geodesic_connect_with(&params, &p, &q, 1.0).unwrap();
    let n = 2000usize;
    let mut acc = 0.0;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * geo.velocity_at(t).unwrap().norm();
    }
    let length = acc / (3.0 * n as f64);
    assert_close(d, length, 1e-8, "distance vs integrated length");

    // Radial geodesics through the origin are straight in the chart, so the
    // distance also has a quadrature closed form: int_0^1 e^{x^2/4} dx.
    let n = 4000usize;
    let mut acc = 0.0;
    for i in 0..=n {
        let x = i as f64 / n as f64;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * (x * x / 4.0f64).exp();
    }
    let radial = acc / (3.0 * n as f64);
    assert_close(d, radial, 1e-8, "distance vs radial quadrature");
}

#[test]
fn exp_map_e2_affine() {
    let p = Point::new(ModelId::E2, &[0.0, 0.0]).unwrap();
    let x = TangentVec::new(p, &[1.0, 0.0]).unwrap();
    let q = exp_map(&p, &x, 2.0).unwrap();
    assert_eq!(q.chart(), (2.0, 0.0));
}

#[test]
fn exp_map_h2_closed_form() {
    let p = h2_origin();
    let x = TangentVec::new(p, &[1.0, 0.0, 0.0]).unwrap();
    let q = exp_map(&p, &x, 1.0).unwrap();
    let e = [(1.0f64).sinh(), 0.0, (1.0f64).cosh()];
    for (a, b) in q.as_slice().iter().zip(e.iter()) {
        assert_close(*a, *b, 1e-14, "exp image");
    }
}

#[test]
fn exp_map_spinch_self_consistency() {
    let params = PinchParams::default();
    let p = Point::new(ModelId::SPinch, &[0.2, -0.1]).unwrap();
    let dir = TangentVec::new(p, &[0.6, 0.8]).unwrap().normalized().unwrap();
    for &t in &[0.5, 1.0, 2.5, 5.0] {
        let q = exp_map_with(&params, &p, &dir, t).unwrap();
        let back = distance_with(&params, &p, &q).unwrap();
        assert_close(back, t, 1e-8, "exp then distance back");
    }
}

#[test]
fn log_map_e2() {
    let p = Point::new(ModelId::E2, &[0.0, 0.0]).unwrap();
    let q = Point::new(ModelId::E2, &[3.0, 4.0]).unwrap();
    let v = log_map(&p, &q).unwrap();
    assert_eq!(v.as_slice(), &[3.0, 4.0]);
}

#[test]
fn log_map_inverts_exp_h2() {
    let p = h2_origin();
    let x = TangentVec::new(p, &[0.6, -0.8, 0.0]).unwrap();
    let q = exp_map(&p, &x, 1.0).unwrap();
    let v = log_map(&p, &q).unwrap();
    for (a, b) in v.as_slice().iter().zip(x.as_slice()) {
        assert_close(*a, *b, 1e-10, "log(exp(X))");
    }
}

#[test]
fn log_map_norm_is_distance_h3_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let p = random_point(ModelId::H3, &mut rng, 2.0);
        let q = random_point(ModelId::H3, &mut rng, 2.0);
        let v = log_map(&p, &q).unwrap();
        let d = distance(&p, &q).unwrap();
        assert_close(v.norm(), d, 1e-12 * (1.0 + d), "|log| vs distance");
    }
}

#[test]
fn log_map_unsupported_on_spinch() {
    let p = Point::new(ModelId::SPinch, &[0.0, 0.0]).unwrap();
    let q = Point::new(ModelId::SPinch, &[1.0, 0.0]).unwrap();
    assert!(matches!(log_map(&p, &q), Err(Error::UnsupportedModel(ModelId::SPinch, _))));
}

#[test]
fn geodesic_connect_e2() {
    let p = Point::new(ModelId::E2, &[0.0, 0.0]).unwrap();
    let q = Point::new(ModelId::E2, &[2.0, 0.0]).unwrap();
    let g = geodesic_connect(&p, &q, 1.0).unwrap();
    assert_eq!(g.velocity().as_slice(), &[2.0, 0.0]);
    assert_close(g.speed(), 2.0, 1e-15, "speed");
}

#[test]
fn geodesic_connect_h2_endpoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let p = random_point(ModelId::H2, &mut rng, 2.0);
        let q = random_point(ModelId::H2, &mut rng, 2.0);
        let l = 1.0 + rng.gen::<f64>() * 3.0;
        let g = geodesic_connect(&p, &q, l).unwrap();
        let end = g.point_at(l).unwrap();
        // Distance cannot resolve below sqrt(2 eps); compare coordinates.
        let err = coord_residual(&end, &q);
        let scale = 1.0 + q.as_slice().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        assert!(err < 1e-10 * scale, "endpoint residual {err}");
    }
}

#[test]
fn geodesic_connect_spinch_endpoint_residual() {
    let params = PinchParams::default();
    let p = Point::new(ModelId::SPinch, &[-1.0, 0.0]).unwrap();
    let q = Point::new(ModelId::SPinch, &[1.0, 0.0]).unwrap();
    let g = geodesic_connect_with(&params, &p, &q, 1.0).unwrap();
    let end = g.point_at(1.0).unwrap();
    let (ex, ey) = end.chart();
    let (qx, qy) = q.chart();
    let res = ((ex - qx).powi(2) + (ey - qy).powi(2)).sqrt();
    assert!(res < 1e-8, "endpoint residual {res}");
    assert!(matches!(
        geodesic_connect_with(&params, &p, &p, 1.0),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn parallel_transport_velocity_is_parallel() {
    let p = h2_origin();
    let dir = TangentVec::new(p, &[1.0, 0.0, 0.0]).unwrap();
    let geo = Geodesic::from_velocity(dir, 3.0).unwrap();
    let moved = parallel_transport(&geo, &geo.velocity(), 0.0, 2.0).unwrap();
    let expect = geo.velocity_at(2.0).unwrap();
    for (a, b) in moved.as_slice().iter().zip(expect.as_slice()) {
        assert_close(*a, *b, 1e-12, "transported velocity");
    }
}

#[test]
fn parallel_transport_e2_identity() {
    let p = Point::new(ModelId::E2, &[1.0, 2.0]).unwrap();
    let dir = TangentVec::new(p, &[0.0, 1.0]).unwrap();
    let geo = Geodesic::from_velocity(dir, 5.0).unwrap();
    let x = TangentVec::new(p, &[0.3, -0.4]).unwrap();
    let y = parallel_transport(&geo, &x, 0.0, 4.0).unwrap();
    assert_eq!(y.as_slice(), x.as_slice());
}

#[test]
fn parallel_transport_preserves_inner_products_h2() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = h2_origin();
    let dir = TangentVec::new(p, &[1.0, 0.0, 0.0]).unwrap();
    let geo = Geodesic::from_velocity(dir, 4.0).unwrap();
    for _ in 0..100 {
        let x = random_tangent(&p, &mut rng);
        let y = random_tangent(&p, &mut rng);
        let ip0 = metric_inner(&p, &x, &y).unwrap();
        let tx = parallel_transport(&geo, &x, 0.0, 3.5).unwrap();
        let ty = parallel_transport(&geo, &y, 0.0, 3.5).unwrap();
        let base = geo.point_at(3.5).unwrap();
        let ip1 = metric_inner(&base, &tx, &ty).unwrap();
        assert_close(ip0, ip1, 1e-10, "transport isometry");
    }
}

#[test]
fn curvature_e2_zero() {
    let p = Point::new(ModelId::E2, &[0.0, 0.0]).unwrap();
    let x = TangentVec::new(p, &[1.0, 2.0]).unwrap();
    let y = TangentVec::new(p, &[-1.0, 0.5]).unwrap();
    let r = curvature_op(&p, &x, &y, &x).unwrap();
    assert_eq!(r.as_slice(), &[0.0, 0.0]);
}

#[test]
fn curvature_h2_sectional_minus_one() {
    let p = h2_origin();
    let basis = tangent_basis(&p);
    let r = curvature_op(&p, &basis[0], &basis[1], &basis[1]).unwrap();
    let sec = metric_inner(&p, &r, &basis[0]).unwrap();
    assert_close(sec, -1.0, 1e-14, "sectional curvature");
}

#[test]
fn curvature_spinch_gauss_oracle() {
    // Symbolic oracle: K = -e^{-2u} * laplacian(u) with laplacian(u) = 1.
    let p0 = Point::new(ModelId::SPinch, &[0.0, 0.0]).unwrap();
    let basis = tangent_basis(&p0);
    let r = curvature_op(&p0, &basis[0], &basis[1], &basis[1]).unwrap();
    let k0 = metric_inner(&p0, &r, &basis[0]).unwrap();
    assert_close(k0, -1.0, 1e-13, "K(0,0)");

    let x = (2.0 * (2.0f64).ln()).sqrt();
    let p = Point::new(ModelId::SPinch, &[x, 0.0]).unwrap();
    let basis = tangent_basis(&p);
    let r = curvature_op(&p, &basis[0], &basis[1], &basis[1]).unwrap();
    let k = metric_inner(&p, &r, &basis[0]).unwrap();
    assert_close(k, -0.5, 1e-13, "K at |x|^2 = 2 ln 2");

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let (px, py) = (rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0);
        let p = Point::new(ModelId::SPinch, &[px, py]).unwrap();
        let basis = tangent_basis(&p);
        let r = curvature_op(&p, &basis[0], &basis[1], &basis[1]).unwrap();
        let k = metric_inner(&p, &r, &basis[0]).unwrap();
        assert_close(k, gauss_curvature(&p), 1e-12, "K vs closed form");
    }
}

#[test]
fn christoffel_symmetry_exact() {
    let g = pinch::christoffel(0.73, -1.21);
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g[k][i][j], g[k][j][i]);
            }
        }
    }
}

#[test]
fn spinch_curvature_pinch_on_grid() {
    for i in 0..100 {
        for j in 0..100 {
            let x = -3.0 + 6.0 * i as f64 / 99.0;
            let y = -3.0 + 6.0 * j as f64 / 99.0;
            let k = pinch::gauss_curvature(x, y);
            assert!((-1.0..0.0).contains(&k), "K({x},{y}) = {k}");
        }
    }
}

#[test]
fn grad_distance_e2() {
    let p = Point::new(ModelId::E2, &[1.0, 0.0]).unwrap();
    let q = Point::new(ModelId::E2, &[0.0, 0.0]).unwrap();
    let g = grad_distance(&p, &q).unwrap();
    assert_eq!(g.as_slice(), &[1.0, 0.0]);
}

#[test]
fn grad_distance_unit_and_fd_directional_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for model in [ModelId::H2, ModelId::E2] {
        for _ in 0..10 {
            let p = random_point(model, &mut rng, 1.5);
            let q = random_point(model, &mut rng, 1.5);
            if distance(&p, &q).unwrap() < 0.3 {
                continue;
            }
            let g = grad_distance(&p, &q).unwrap();
            assert_close(g.norm(), 1.0, 1e-12, "unit gradient");
            // exp(p, -grad, d) = q
            let d = distance(&p, &q).unwrap();
            let back = exp_map(&p, &g.scale(-1.0), d).unwrap();
            assert!(coord_residual(&back, &q) < 1e-8);
            // FD directional derivative of d(., q) along grad is 1.
            let h = 1e-4;
            let plus = exp_map(&p, &g, h).unwrap();
            let minus = exp_map(&p, &g, -h).unwrap();
            let fd = (distance(&plus, &q).unwrap() - distance(&minus, &q).unwrap()) / (2.0 * h);
            assert_close(fd, 1.0, 1e-6, "directional derivative");
        }
    }
}

#[test]
fn hyperboloid_points_stay_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let p = random_point(ModelId::H3, &mut rng, 3.0);
        let c = p.as_slice();
        let q = c[0] * c[0] + c[1] * c[1] + c[2] * c[2] - c[3] * c[3];
        assert!((q + 1.0).abs() <= tol::HYPERBOLOID_NORMALIZATION);
    }
}

#[test]
fn exp_log_roundtrip_large_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for model in [ModelId::H2, ModelId::H3, ModelId::E2] {
        for _ in 0..20 {
            let p = random_point(model, &mut rng, 1.0);
            let dir = random_tangent(&p, &mut rng).normalized().unwrap();
            let r = rng.gen::<f64>() * 20.0;
            let x = dir.scale(r);
            let q = exp_map(&p, &x, 1.0).unwrap();
            let v = log_map(&p, &q).unwrap();
            let err: f64 = v
                .as_slice()
                .iter()
                .zip(x.as_slice())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-9 * (1.0 + r), "roundtrip error {err} at radius {r}");
        }
    }
}

#[test]
fn triangle_inequality_all_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for model in [ModelId::H2, ModelId::H3, ModelId::E2, ModelId::SPinch] {
        let n = if model == ModelId::SPinch { 150 } else { 1000 };
        let radius = if model == ModelId::SPinch { 1.0 } else { 3.0 };
        for _ in 0..n {
            let a = random_point(model, &mut rng, radius);
            let b = random_point(model, &mut rng, radius);
            let c = random_point(model, &mut rng, radius);
            let (dab, dbc, dac) = (
                distance(&a, &b).unwrap(),
                distance(&b, &c).unwrap(),
                distance(&a, &c).unwrap(),
            );
            assert!(dab + dbc - dac >= -1e-9, "triangle slack {}", dab + dbc - dac);
        }
    }
}

pub fn random_point(model: ModelId, rng: &mut ChaCha8Rng, radius: f64) -> Point {
    match model {
        ModelId::E2 | ModelId::SPinch => {
            let r = radius * rng.gen::<f64>();
            let a = rng.gen::<f64>() * std::f64::consts::TAU;
            Point::new(model, &[r * a.cos(), r * a.sin()]).unwrap()
        }
        ModelId::H2 | ModelId::H3 => {
            let o = if model == ModelId::H2 {
                Point::new(model, &[0.0, 0.0, 1.0]).unwrap()
            } else {
                Point::new(model, &[0.0, 0.0, 0.0, 1.0]).unwrap()
            };
            let dir = random_tangent(&o, rng).normalized().unwrap();
            exp_map(&o, &dir, radius * rng.gen::<f64>()).unwrap()
        }
    }
}

pub fn random_tangent(p: &Point, rng: &mut ChaCha8Rng) -> TangentVec {
    let basis = tangent_basis(p);
    let mut v = TangentVec::zero(*p);
    for b in &basis {
        v = v.add(&b.scale(rng.gen::<f64>() * 2.0 - 1.0));
    }
    if v.norm() < 1e-6 {
        return basis[0];
    }
    v
}
