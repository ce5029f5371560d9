//! Brillouin-zone averages ∫ dk/2π f(k) over [-π, π].
//!
//! Every integrand in this crate is smooth, 2π-periodic and even in k, so the
//! trapezoid rule on [0, π] converges exponentially. The grid is doubled
//! (reusing all previous nodes) until two successive levels agree.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    /// Starting number of points on the full zone [-π, π).
    pub k_points: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Doubling stops with an error beyond this many points.
    pub max_points: usize,
}

impl Default for KGrid {
    fn default() -> Self {
        KGrid {
            k_points: 512,
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_points: 1 << 22,
        }
    }
}

impl KGrid {
    pub fn with_points(k_points: usize) -> Self {
        KGrid {
            k_points,
            ..Default::default()
        }
    }
}

/// Converged zone average together with the grid that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneAverage<const N: usize> {
    pub value: [f64; N],
    /// |I(2M) - I(M)| per component at the final level.
    pub error: [f64; N],
    pub n_points: usize,
}

/// Averages a vector-valued even periodic integrand.
pub fn zone_average<const N: usize, F>(grid: &KGrid, f: F) -> Result<ZoneAverage<N>>
where
    F: Fn(f64) -> [f64; N],
{
    use std::f64::consts::PI;

    // M intervals on [0, π] correspond to 2M points on the full zone.
    let mut m = (grid.k_points / 2).max(2);
    let mut sum = [0.0; N];
    let f0 = f(0.0);
    let fpi = f(PI);
    for c in 0..N {
        sum[c] = 0.5 * (f0[c] + fpi[c]);
    }
    for j in 1..m {
        let v = f(PI * j as f64 / m as f64);
        for c in 0..N {
            sum[c] += v[c];
        }
    }
    let mut previous = sum.map(|s| s / m as f64);

    loop {
        for i in 0..m {
            let v = f(PI * (2 * i + 1) as f64 / (2 * m) as f64);
            for c in 0..N {
                sum[c] += v[c];
            }
        }
        m *= 2;
        let current = sum.map(|s| s / m as f64);
        let mut error = [0.0; N];
        let mut converged = true;
        let mut worst = 0usize;
        for c in 0..N {
            error[c] = (current[c] - previous[c]).abs();
            let tol = grid.rel_tol * current[c].abs() + grid.abs_tol;
            if error[c] > tol || !current[c].is_finite() {
                converged = false;
                worst = c;
            }
        }
        if converged {
            return Ok(ZoneAverage {
                value: current,
                error,
                n_points: 2 * m,
            });
        }
        if 4 * m > grid.max_points {
            return Err(Error::Quadrature {
                estimate: current[worst],
                error: error[worst],
                tolerance: grid.rel_tol * current[worst].abs() + grid.abs_tol,
                n_points: 2 * m,
            });
        }
        previous = current;
    }
}

/// Scalar convenience wrapper around [`zone_average`].
pub fn zone_average_scalar<F>(grid: &KGrid, f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let avg = zone_average(grid, |k| [f(k)])?;
    Ok((avg.value[0], avg.error[0]))
}
