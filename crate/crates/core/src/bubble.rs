//! Regularized particle-particle and particle-hole bubbles.
//!
//! The soft cutoff Θ(ε) = (|ε|/Λ)/(e^{|ε|/Λ} − 1) tends to 1 for Λ → ∞ and
//! suppresses every mode as Λ → 0, so the flow starts from the full bubble and
//! ends with all modes integrated out.

use serde::{Deserialize, Serialize};

use crate::model::{dispersion, fermi_divided_difference, Band, ModelParams};
use crate::quadrature::{zone_average, KGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BubbleKind {
    ParticleParticle,
    ParticleHole,
}

/// Θ(x) = x/(eˣ − 1) for x = |ε|/Λ, with Θ(0) = 1. `lambda = ∞` gives 1.
pub fn cutoff_function(energy: f64, lambda: f64) -> f64 {
    let x = energy.abs() / lambda;
    if x == 0.0 {
        1.0
    } else if x < 1e-8 {
        1.0 - 0.5 * x
    } else {
        x / x.exp_m1()
    }
}

/// Λ∂_Λ Θ(|ε|/Λ) = −x Θ'(x).
pub fn cutoff_scale_derivative(energy: f64, lambda: f64) -> f64 {
    let x = energy.abs() / lambda;
    if x < 0.2 {
        let x2 = x * x;
        // Bernoulli series of −xΘ'(x).
        x / 2.0
            + x2 * (-1.0 / 6.0
                + x2 * (1.0 / 180.0 + x2 * (-1.0 / 5040.0 + x2 * (1.0 / 151200.0 - x2 / 4790016.0))))
    } else {
        let e = (-x).exp();
        let denom = -(-x).exp_m1();
        x * e * (x - denom) / (denom * denom)
    }
}

/// Occupation factor of a bubble at fixed k (without cutoff).
fn kernel(kind: BubbleKind, e1: f64, e2: f64, temperature: f64) -> f64 {
    match kind {
        BubbleKind::ParticleHole => fermi_divided_difference(e1, e2, temperature),
        BubbleKind::ParticleParticle => -fermi_divided_difference(-e1, e2, temperature),
    }
}

/// Band pairs with distinct bubbles: (s,s), (s,p), (p,p).
const PAIRS: [(Band, Band); 3] = [(Band::S, Band::S), (Band::S, Band::Px), (Band::Px, Band::Px)];

fn pair_slot(nu: Band, nup: Band) -> usize {
    match (nu.is_p(), nup.is_p()) {
        (false, false) => 0,
        (true, true) => 2,
        _ => 1,
    }
}

/// All bubbles Π_{νν′} (or their scale derivatives) at one cutoff, computed in a
/// single momentum quadrature. p_x and p_y are degenerate, so entries depend
/// only on the s/p character of ν and ν′.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleTable {
    pub lambda: f64,
    /// True if the entries are Λ∂_ΛΠ rather than Π.
    pub derivative: bool,
    pub ph: [[f64; 3]; 3],
    pub pp: [[f64; 3]; 3],
    /// Points used by the converged quadrature.
    pub n_points: usize,
    /// Largest |I(2M) − I(M)| among the entries.
    pub max_error: f64,
}

impl BubbleTable {
    pub fn values(params: &ModelParams, lambda: f64, grid: &KGrid) -> Result<Self> {
        Self::compute(params, lambda, grid, false)
    }

    pub fn scale_derivatives(params: &ModelParams, lambda: f64, grid: &KGrid) -> Result<Self> {
        Self::compute(params, lambda, grid, true)
    }

    fn compute(params: &ModelParams, lambda: f64, grid: &KGrid, derivative: bool) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff must be positive, got {lambda}")));
        }
        let t = params.temperature;
        let avg = zone_average(grid, |k| {
            let es = dispersion(params, Band::S, k);
            let ep = dispersion(params, Band::Px, k);
            let energies = [es, ep];
            let theta = [cutoff_function(es, lambda), cutoff_function(ep, lambda)];
            let dtheta = if derivative && lambda.is_finite() {
                [cutoff_scale_derivative(es, lambda), cutoff_scale_derivative(ep, lambda)]
            } else {
                [0.0, 0.0]
            };
            let mut out = [0.0; 6];
            for (slot, (a, b)) in PAIRS.iter().enumerate() {
                let (ia, ib) = (a.is_p() as usize, b.is_p() as usize);
                let weight = if derivative {
                    dtheta[ia] * theta[ib] + theta[ia] * dtheta[ib]
                } else {
                    theta[ia] * theta[ib]
                };
                if weight == 0.0 {
                    continue;
                }
                out[slot] = weight * kernel(BubbleKind::ParticleHole, energies[ia], energies[ib], t);
                out[3 + slot] = weight * kernel(BubbleKind::ParticleParticle, energies[ia], energies[ib], t);
            }
            out
        })?;
        let mut ph = [[0.0; 3]; 3];
        let mut pp = [[0.0; 3]; 3];
        for nu in Band::ALL {
            for nup in Band::ALL {
                let slot = pair_slot(nu, nup);
                ph[nu.index()][nup.index()] = avg.value[slot];
                pp[nu.index()][nup.index()] = avg.value[3 + slot];
            }
        }
        Ok(BubbleTable {
            lambda,
            derivative,
            ph,
            pp,
            n_points: avg.n_points,
            max_error: avg.error.iter().cloned().fold(0.0, f64::max),
        })
    }

    pub fn get(&self, kind: BubbleKind, nu: Band, nup: Band) -> f64 {
        match kind {
            BubbleKind::ParticleHole => self.ph[nu.index()][nup.index()],
            BubbleKind::ParticleParticle => self.pp[nu.index()][nup.index()],
        }
    }
}

/// Π^{kind}_{νν′}(Λ) on the default grid.
pub fn bubble(kind: BubbleKind, nu: Band, nup: Band, lambda: f64, params: &ModelParams) -> Result<f64> {
    Ok(BubbleTable::values(params, lambda, &KGrid::default())?.get(kind, nu, nup))
}

/// Λ∂_Λ Π^{kind}_{νν′}(Λ) on the default grid.
pub fn bubble_scale_derivative(
    kind: BubbleKind,
    nu: Band,
    nup: Band,
    lambda: f64,
    params: &ModelParams,
) -> Result<f64> {
    Ok(BubbleTable::scale_derivatives(params, lambda, &KGrid::default())?.get(kind, nu, nup))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(t_s: f64, t_p: f64, delta: f64, temperature: f64) -> ModelParams {
        ModelParams::new(t_s, t_p, delta, 0.0, 0.0, 0.0, temperature).unwrap()
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_function(0.0, 1.0), 1.0);
        assert!((cutoff_function(1e-12, 1.0) - 1.0).abs() < 1e-12);
        let expected = 1.0 / (std::f64::consts::E - 1.0);
        assert!((cutoff_function(1.0, 1.0) - expected).abs() < 1e-15);
        assert!((cutoff_function(1.0, 1.0) - 0.58198).abs() < 1e-5);
        assert!(cutoff_function(10.0, 0.1) < 1e-40);
        assert_eq!(cutoff_function(3.0, f64::INFINITY), 1.0);
    }

    #[test]
    fn cutoff_derivative_matches_finite_difference() {
        for &x in &[1e-6, 0.1, 0.19, 0.2, 0.21, 1.0, 3.0, 20.0] {
            let h = 1e-5;
            let fd = (cutoff_function(x, 1.0 + h) - cutoff_function(x, 1.0 - h)) / (2.0 * h);
            let an = cutoff_scale_derivative(x, 1.0);
            assert!((fd - an).abs() < 1e-8, "x={x}: {fd} vs {an}");
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        // Reference values from 40-digit arithmetic.
        let below = cutoff_scale_derivative(0.19999, 1.0);
        let at = cutoff_scale_derivative(0.2, 1.0);
        assert!((below - 0.093_337_874_416_877_23).abs() < 1e-16);
        assert!((at - 0.093_342_209_540_719_39).abs() < 1e-15);
    }

    #[test]
    fn full_bubble_examples() {
        let p = params(2.0, 1.0, 1.0, 0.0);
        let ph_sp = bubble(BubbleKind::ParticleHole, Band::S, Band::Px, f64::INFINITY, &p).unwrap();
        assert!((-ph_sp - 1.0 / 13f64.sqrt()).abs() < 1e-12);
        let ph_ss = bubble(BubbleKind::ParticleHole, Band::S, Band::S, f64::INFINITY, &p).unwrap();
        assert_eq!(ph_ss, 0.0);
        let table = BubbleTable::values(&p, 3.0, &KGrid::default()).unwrap();
        for kind in [BubbleKind::ParticleHole, BubbleKind::ParticleParticle] {
            for a in Band::ALL {
                for b in Band::ALL {
                    assert_eq!(table.get(kind, a, b), table.get(kind, b, a));
                }
            }
        }
    }

    #[test]
    fn zero_temperature_pp_closed_forms() {
        // Π^pp_ss = ∫ 1/(2|ε_s|), Π^pp_sp = 0 at T = 0.
        let p = params(2.0, 1.0, 1.0, 0.0);
        let t = BubbleTable::values(&p, f64::INFINITY, &KGrid::default()).unwrap();
        let (a, b) = (0.5 + 4.0, 4.0);
        let expected = 0.5 / ((a * a - b * b) as f64).sqrt();
        assert!((t.get(BubbleKind::ParticleParticle, Band::S, Band::S) - expected).abs() < 1e-12);
        assert_eq!(t.get(BubbleKind::ParticleParticle, Band::S, Band::Py), 0.0);
    }

    #[test]
    fn scale_derivative_limits() {
        let p = params(2.0, 1.0, 0.5, 0.01);
        let grid = KGrid::default();
        let hi = BubbleTable::scale_derivatives(&p, 1e8, &grid).unwrap();
        let lo = BubbleTable::scale_derivatives(&p, 1e-4, &grid).unwrap();
        for a in Band::ALL {
            for b in Band::ALL {
                assert!(hi.get(BubbleKind::ParticleHole, a, b).abs() < 1e-6);
                assert!(lo.get(BubbleKind::ParticleHole, a, b).abs() < 1e-100);
            }
        }
        let inf = BubbleTable::scale_derivatives(&p, f64::INFINITY, &grid).unwrap();
        assert_eq!(inf.ph, [[0.0; 3]; 3]);
    }

    #[test]
    fn scale_derivative_matches_finite_difference() {
        let p = params(2.0, 1.0, 0.2, 0.05);
        let grid = KGrid::default();
        for &lambda in &[0.05, 0.3, 2.0, 15.0] {
            let h = 1e-4;
            let plus = BubbleTable::values(&p, lambda * (1.0 + h), &grid).unwrap();
            let minus = BubbleTable::values(&p, lambda * (1.0 - h), &grid).unwrap();
            let an = BubbleTable::scale_derivatives(&p, lambda, &grid).unwrap();
            for kind in [BubbleKind::ParticleHole, BubbleKind::ParticleParticle] {
                for (a, b) in PAIRS {
                    let fd = (plus.get(kind, a, b) - minus.get(kind, a, b)) / (2.0 * h);
                    let d = an.get(kind, a, b);
                    let scale = d.abs().max(1e-12);
                    assert!((fd - d).abs() / scale < 1e-5, "{kind:?} {a:?}{b:?} Λ={lambda}: {fd} vs {d}");
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_cutoff() {
        let p = params(1.0, 1.0, 1.0, 0.0);
        assert!(bubble(BubbleKind::ParticleHole, Band::S, Band::Px, 0.0, &p).is_err());
    }

    proptest! {
        #[test]
        fn cutoff_in_unit_interval(e in -50.0f64..50.0, lambda in 1e-3f64..1e3) {
            let v = cutoff_function(e, lambda);
            prop_assert!(v > 0.0 || (e / lambda).abs() > 700.0);
            prop_assert!(v <= 1.0);
            prop_assert!(cutoff_scale_derivative(e, lambda) >= 0.0);
        }

        #[test]
        fn interband_ph_bubble_is_negative(t_s in 0.2f64..3.0, t_p in 0.2f64..3.0, delta in 0.05f64..2.0, temp in 0.0f64..0.5) {
            let p = params(t_s, t_p, delta, temp);
            let v = bubble(BubbleKind::ParticleHole, Band::S, Band::Px, 10.0, &p).unwrap();
            prop_assert!(v < 0.0);
        }
    }
}
