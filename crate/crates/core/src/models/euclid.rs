//! Euclidean plane: everything is affine.

use super::{Geodesic, ModelId, Point, TangentVec};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn distance(p: &Point, q: &Point) -> f64 {
    let (px, py) = p.chart();
    let (qx, qy) = q.chart();
    ((qx - px).powi(2) + (qy - py).powi(2)).sqrt()
}

pub fn exp(p: &Point, x: &TangentVec, t: f64) -> Point {
    let (px, py) = p.chart();
    let v = x.as_slice();
    Point::from_array(ModelId::E2, [px + t * v[0], py + t * v[1], 0.0, 0.0])
}

pub fn log(p: &Point, q: &Point) -> TangentVec {
    let (px, py) = p.chart();
    let (qx, qy) = q.chart();
    TangentVec::from_array(*p, [qx - px, qy - py, 0.0, 0.0])
}

pub fn geo_point(geo: &Geodesic, t: f64) -> Point {
    exp(&geo.start(), &geo.velocity(), t)
}

pub fn geo_velocity(geo: &Geodesic, t: f64) -> TangentVec {
    TangentVec::from_array(geo_point(geo, t), geo.velocity().array())
}
