//! Embedded Dormand–Prince 5(4) stepper with first-same-as-last reuse.

use crate::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

pub(crate) struct Accepted<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    /// Derivative at the new point.
    pub dydt: [f64; N],
}

pub(crate) struct Stepper<const N: usize> {
    tol: Tolerances,
    h: f64,
}

impl<const N: usize> Stepper<N> {
    pub fn new(tol: Tolerances, h0: f64) -> Self {
        Stepper { tol, h: h0.min(tol.h_max) }
    }

    /// Advances from (t, y) with derivative `dydt` to the next accepted point,
    /// never past `t_end`. `lambda_of` maps t to the cutoff for underflow diagnostics.
    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &[f64; N], dydt: &[f64; N], t_end: f64, lambda_of: impl Fn(f64) -> f64) -> Result<Accepted<N>>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        loop {
            let h = self.h.min(t_end - t).min(self.tol.h_max);
            if h < 1e-12 * (1.0 + t.abs()) {
                return Err(Error::StepUnderflow {
                    l: t,
                    lambda: lambda_of(t),
                    max_vertex: y.iter().map(|v| v.abs()).fold(0.0, f64::max),
                });
            }
            let mut k = [[0.0; N]; 7];
            k[0] = *dydt;
            let mut finite = true;
            for s in 1..7 {
                let mut ys = *y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..N {
                            ys[i] += h * a * kj[i];
                        }
                    }
                }
                k[s] = f(t + C[s] * h, &ys)?;
                if k[s].iter().any(|v| !v.is_finite()) {
                    finite = false;
                    break;
                }
            }
            if !finite {
                self.h = 0.2 * h;
                continue;
            }
            let mut y_new = *y;
            for i in 0..N {
                for s in 0..6 {
                    y_new[i] += h * A[6][s] * k[s][i];
                }
            }
            let mut sum = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for s in 0..7 {
                    e += E[s] * k[s][i];
                }
                let scale = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
                sum += (h * e / scale).powi(2);
            }
            let err = (sum / N as f64).sqrt();
            if !err.is_finite() {
                self.h = 0.2 * h;
                continue;
            }
            if err <= 1.0 {
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                self.h = h * factor;
                return Ok(Accepted {
                    t: t + h,
                    y: y_new,
                    dydt: k[6],
                });
            }
            self.h = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
}
