//! Fixed-step classical RK4 with dense output.
//!
//! Fixed step is deliberate: runs are bit-reproducible for a given step,
//! which keeps scan tables deterministic. Dense evaluation between nodes
//! uses cubic Hermite interpolation on the stored states and derivatives,
//! whose O(h^4) error matches the integrator's global order.

/// Dense trajectory of a first-order system y' = f(t, y) on [0, t_end].
#[derive(Debug, Clone)]
pub struct DenseTraj<const N: usize> {
    pub h: f64,
    pub t_end: f64,
    /// States at t = i*h (last node at t_end).
    pub states: Vec<[f64; N]>,
    /// RHS evaluations at the same nodes.
    pub derivs: Vec<[f64; N]>,
}

pub fn rk4_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = f(t, y);
    let mut y2 = *y;
    for i in 0..N {
        y2[i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = f(t + 0.5 * h, &y2);
    for i in 0..N {
        y2[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = f(t + 0.5 * h, &y2);
    for i in 0..N {
        y2[i] = y[i] + h * k3[i];
    }
    let k4 = f(t + h, &y2);
    let mut out = *y;
    for i in 0..N {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrate y' = f(t, y) from 0 to t_end (t_end >= 0) with step h,
/// storing every node. The final step is shortened to land on t_end.
pub fn integrate<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    t_end: f64,
    h: f64,
) -> DenseTraj<N> {
    assert!(t_end >= 0.0 && h > 0.0);
    let n_full = (t_end / h).floor() as usize;
    let mut states = Vec::with_capacity(n_full + 2);
    let mut derivs = Vec::with_capacity(n_full + 2);
    let mut y = y0;
    let mut t = 0.0;
    states.push(y);
    derivs.push(f(t, &y));
    for _ in 0..n_full {
        y = rk4_step(&f, t, &y, h);
        t += h;
        states.push(y);
        derivs.push(f(t, &y));
    }
    let rem = t_end - t;
    if rem > 1e-14 * (1.0 + t_end) {
        y = rk4_step(&f, t, &y, rem);
        states.push(y);
        derivs.push(f(t_end, &y));
    }
    DenseTraj { h, t_end, states, derivs }
}

/// Integrate without storing the trajectory; returns the final state.
pub fn integrate_to<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    t_end: f64,
    h: f64,
) -> [f64; N] {
    assert!(t_end >= 0.0 && h > 0.0);
    let n_full = (t_end / h).floor() as usize;
    let mut y = y0;
    let mut t = 0.0;
    for _ in 0..n_full {
        y = rk4_step(&f, t, &y, h);
        t += h;
    }
    let rem = t_end - t;
    if rem > 1e-14 * (1.0 + t_end) {
        y = rk4_step(&f, t, &y, rem);
    }
    y
}

impl<const N: usize> DenseTraj<N> {
    pub fn last(&self) -> &[f64; N] {
        self.states.last().unwrap()
    }

    /// Cubic Hermite evaluation of the state at t in [0, t_end].
    pub fn eval(&self, t: f64) -> [f64; N] {
        let t = t.clamp(0.0, self.t_end);
        // Locate the containing step. All interior steps have width h; the
        // last one may be shorter.
        let n_nodes = self.states.len();
        if n_nodes == 1 {
            return self.states[0];
        }
        let mut idx = (t / self.h).floor() as usize;
        if idx + 1 >= n_nodes {
            idx = n_nodes - 2;
        }
        let t_left = idx as f64 * self.h;
        let width = if idx + 2 == n_nodes {
            self.t_end - t_left
        } else {
            self.h
        };
        if width <= 0.0 {
            return self.states[idx + 1];
        }
        let s = ((t - t_left) / width).clamp(0.0, 1.0);
        let (y0, y1) = (&self.states[idx], &self.states[idx + 1]);
        let (d0, d1) = (&self.derivs[idx], &self.derivs[idx + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = h00 * y0[i] + h10 * width * d0[i] + h01 * y1[i] + h11 * width * d1[i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_harmonic_oscillator() {
        // y'' = -y, closed solution cos t.
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let traj = integrate(f, [1.0, 0.0], 10.0, 1e-3);
        let end = traj.last();
        assert!((end[0] - (10.0f64).cos()).abs() < 1e-10);
        assert!((end[1] + (10.0f64).sin()).abs() < 1e-10);
    }

    #[test]
    fn dense_eval_matches_nodes_and_interior() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let traj = integrate(f, [1.0, 0.0], 3.0, 1e-2);
        for &t in &[0.0, 0.005, 0.5, 1.2345, 2.999, 3.0] {
            let y = traj.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}: {} vs {}", y[0], t.cos());
        }
    }

    #[test]
    fn partial_last_step() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let traj = integrate(f, [1.0], 1.0005, 1e-3);
        assert!((traj.last()[0] - (1.0005f64).exp()).abs() < 1e-10);
        assert!((traj.eval(1.0005)[0] - (1.0005f64).exp()).abs() < 1e-10);
    }
}
