//! Central finite-difference stencils with Richardson extrapolation for
//! mixed partials of a scalar function of two variables.
//!
//! Step sizes are chosen per derivative order. With function noise eps the
//! roundoff of an order-k stencil is ~ eps / h^k while truncation is
//! O(h^2) (plain) or O(h^4) (Richardson), so higher orders need larger
//! steps. The defaults below keep finite-difference error comfortably
//! inside the cross-route tolerances for distance functions evaluated to
//! ~1e-15 (closed form) or ~1e-11 (shooting BVP) at separations up to 10.

/// Per-order base steps for the stencils.
#[derive(Debug, Clone, Copy)]
pub struct FdSteps {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    /// Steps for first/second derivatives of coordinate curves (log-map
    /// images), whose evaluations are closed form and much less noisy.
    pub coord_h1: f64,
    pub coord_h2: f64,
    /// Apply one Richardson level (evaluate at h and h/2).
    pub richardson: bool,
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps {
            h1: 1e-3,
            h2: 5e-3,
            h3: 2e-2,
            h4: 4e-2,
            coord_h1: 5e-3,
            coord_h2: 1e-2,
            richardson: true,
        }
    }
}

impl FdSteps {
    pub fn step_for(&self, total_order: usize) -> f64 {
        match total_order {
            0 | 1 => self.h1,
            2 => self.h2,
            3 => self.h3,
            _ => self.h4,
        }
    }
}

/// Second-order central stencil (offsets in units of h, weights) for the
/// k-th derivative, k <= 4.
fn stencil(k: usize) -> (&'static [f64], &'static [f64]) {
    match k {
        0 => (&[0.0], &[1.0]),
        1 => (&[-1.0, 1.0], &[-0.5, 0.5]),
        2 => (&[-1.0, 0.0, 1.0], &[1.0, -2.0, 1.0]),
        3 => (&[-2.0, -1.0, 1.0, 2.0], &[-0.5, 1.0, -1.0, 0.5]),
        4 => (&[-2.0, -1.0, 0.0, 1.0, 2.0], &[1.0, -4.0, 6.0, -4.0, 1.0]),
        _ => panic!("stencil order {k} not supported"),
    }
}

fn tensor_eval(
    f: &mut dyn FnMut(f64, f64) -> f64,
    r0: f64,
    s0: f64,
    kr: usize,
    ks: usize,
    h: f64,
) -> f64 {
    let (or_, wr) = stencil(kr);
    let (os, ws) = stencil(ks);
    let mut acc = 0.0;
    for (dr, cr) in or_.iter().zip(wr) {
        for (ds, cs) in os.iter().zip(ws) {
            acc += cr * cs * f(r0 + dr * h, s0 + ds * h);
        }
    }
    acc / h.powi((kr + ks) as i32)
}

/// Mixed partial d^{kr}_r d^{ks}_s f at (r0, s0).
///
/// Plain evaluation is second-order accurate; with `richardson` the h and
/// h/2 values are combined to fourth order. Also returns the disagreement
/// |D_h - D_{h/2}| as a noise diagnostic (0 when not extrapolating).
pub fn partial_with_diag(
    f: &mut dyn FnMut(f64, f64) -> f64,
    r0: f64,
    s0: f64,
    kr: usize,
    ks: usize,
    steps: &FdSteps,
) -> (f64, f64) {
    let h = steps.step_for(kr + ks);
    if kr + ks == 0 {
        return (f(r0, s0), 0.0);
    }
    let coarse = tensor_eval(f, r0, s0, kr, ks, h);
    if !steps.richardson {
        return (coarse, 0.0);
    }
    let fine = tensor_eval(f, r0, s0, kr, ks, h / 2.0);
    ((4.0 * fine - coarse) / 3.0, (fine - coarse).abs())
}

pub fn partial(
    f: &mut dyn FnMut(f64, f64) -> f64,
    r0: f64,
    s0: f64,
    kr: usize,
    ks: usize,
    steps: &FdSteps,
) -> f64 {
    partial_with_diag(f, r0, s0, kr, ks, steps).0
}

/// Derivative of a vector-valued curve component-wise (used for coordinate
/// curves of the log map). Same stencil machinery in one variable.
pub fn curve_derivative<const N: usize>(
    f: &mut dyn FnMut(f64) -> [f64; N],
    t0: f64,
    k: usize,
    h: f64,
    richardson: bool,
) -> [f64; N] {
    let eval = |h: f64, f: &mut dyn FnMut(f64) -> [f64; N]| -> [f64; N] {
        let (off, w) = stencil(k);
        let mut acc = [0.0; N];
        for (d, c) in off.iter().zip(w) {
            let v = f(t0 + d * h);
            for i in 0..N {
                acc[i] += c * v[i];
            }
        }
        for a in &mut acc {
            *a /= h.powi(k as i32);
        }
        acc
    };
    let coarse = eval(h, f);
    if !richardson {
        return coarse;
    }
    let fine = eval(h / 2.0, f);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn analytic_partials_of_smooth_function() {
        // f = sin(2r) * exp(s): every mixed partial is known.
        let mut f = |r: f64, s: f64| (2.0 * r).sin() * s.exp();
        let steps = FdSteps::default();
        let (r0, s0): (f64, f64) = (0.3, 0.4);
        let es = s0.exp();
        let cases: [(usize, usize, f64); 7] = [
            (1, 0, 2.0 * (2.0 * r0).cos() * es),
            (0, 1, (2.0 * r0).sin() * es),
            (1, 1, 2.0 * (2.0 * r0).cos() * es),
            (2, 0, -4.0 * (2.0 * r0).sin() * es),
            (0, 2, (2.0 * r0).sin() * es),
            (1, 2, 2.0 * (2.0 * r0).cos() * es),
            (2, 2, -4.0 * (2.0 * r0).sin() * es),
        ];
        for (kr, ks, expect) in cases {
            let got = partial(&mut f, r0, s0, kr, ks, &steps);
            assert!(
                close(got, expect, 1e-7 * (1.0 + expect.abs())),
                "d^{kr}_r d^{ks}_s: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn richardson_beats_plain_on_third_derivative() {
        let mut f = |r: f64, s: f64| (r + 2.0 * s).powi(7);
        let steps_plain = FdSteps { richardson: false, ..FdSteps::default() };
        let steps_rich = FdSteps::default();
        // d^3/dr ds^2 of (r + 2s)^7 = 7*6*5 * 4 * (r+2s)^4
        let expect = 210.0 * 4.0 * (0.5f64 + 2.0 * 0.25).powi(4);
        let plain = partial(&mut f, 0.5, 0.25, 1, 2, &steps_plain);
        let rich = partial(&mut f, 0.5, 0.25, 1, 2, &steps_rich);
        assert!((rich - expect).abs() < (plain - expect).abs());
        assert!(close(rich, expect, 1e-6 * expect));
    }

    #[test]
    fn curve_derivative_matches() {
        let mut c = |t: f64| [t.sin(), t * t * t];
        let d1 = curve_derivative(&mut c, 0.7, 1, 1e-2, true);
        assert!(close(d1[0], (0.7f64).cos(), 1e-10));
        assert!(close(d1[1], 3.0 * 0.49, 1e-9));
        let d2 = curve_derivative(&mut c, 0.7, 2, 1e-2, true);
        assert!(close(d2[0], -(0.7f64).sin(), 1e-8));
        assert!(close(d2[1], 6.0 * 0.7, 1e-8));
    }
}
