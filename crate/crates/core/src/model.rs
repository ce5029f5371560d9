//! Physical parameters and single-particle quantities of the three-orbital chain.
//!
//! The valence band has s character, the twofold-degenerate conduction band
//! p_x/p_y character. The chemical potential sits at mid-gap (μ = 0), so at
//! zero temperature the s band is filled and the p bands are empty.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Model parameters. All energies share one caller-chosen unit, k_B = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// s-band hopping.
    pub t_s: f64,
    /// p-band hopping.
    pub t_p: f64,
    /// Band gap at k = 0.
    pub delta: f64,
    /// Density-density coupling U.
    pub u: f64,
    /// Hund coupling J (negative = ferromagnetic).
    pub j: f64,
    /// Josephson (pair-hopping) coupling J'.
    pub jp: f64,
    pub temperature: f64,
}

impl ModelParams {
    pub fn new(t_s: f64, t_p: f64, delta: f64, u: f64, j: f64, jp: f64, temperature: f64) -> Result<Self> {
        let params = ModelParams {
            t_s,
            t_p,
            delta,
            u,
            j,
            jp,
            temperature,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.t_s, self.t_p, self.delta, self.u, self.j, self.jp, self.temperature];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("all model parameters must be finite".into()));
        }
        if self.t_s <= 0.0 || self.t_p <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "hoppings must be positive (t_s = {}, t_p = {})",
                self.t_s, self.t_p
            )));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidParameter(format!("band gap must be >= 0, got {}", self.delta)));
        }
        if self.temperature < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_couplings(mut self, u: f64, j: f64, jp: f64) -> Self {
        self.u = u;
        self.j = j;
        self.jp = jp;
        self
    }

    /// The spin-orbit channel coupling U - J - J'.
    pub fn coupling(&self) -> f64 {
        self.u - self.j - self.jp
    }

    /// Largest single-band energy span, max(4 t_s, 4 t_p) + Δ.
    pub fn bandwidth(&self) -> f64 {
        4.0 * self.t_s.max(self.t_p) + self.delta
    }

    /// Interband gap ε_p(k) - ε_s(k).
    pub fn interband_gap(&self, k: f64) -> f64 {
        self.delta + 2.0 * (self.t_s + self.t_p) * (1.0 - k.cos())
    }
}

/// Orbital / band index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    S,
    Px,
    Py,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::S, Band::Px, Band::Py];

    /// Sign of the band energy relative to mid-gap: -1 for s, +1 for p.
    pub fn parity(self) -> f64 {
        match self {
            Band::S => -1.0,
            Band::Px | Band::Py => 1.0,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Band {
        Band::ALL[i]
    }

    pub fn is_p(self) -> bool {
        !matches!(self, Band::S)
    }

    pub fn symbol(self) -> char {
        match self {
            Band::S => 's',
            Band::Px => 'x',
            Band::Py => 'y',
        }
    }
}

/// ε_ν(k) = P_ν [Δ/2 + 2 t_ν (1 - cos k)].
pub fn dispersion(params: &ModelParams, band: Band, k: f64) -> f64 {
    let hop = match band {
        Band::S => params.t_s,
        Band::Px | Band::Py => params.t_p,
    };
    band.parity() * (0.5 * params.delta + 2.0 * hop * (1.0 - k.cos()))
}

/// Fermi-Dirac occupation at μ = 0; the T = 0 step has value 1/2 at ε = 0.
pub fn fermi_occupation(energy: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return if energy < 0.0 {
            1.0
        } else if energy > 0.0 {
            0.0
        } else {
            0.5
        };
    }
    let x = energy / temperature;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Divided difference [n_f(a) - n_f(b)] / (a - b), continuous through a = b
/// where it becomes the derivative n_f'(a).
///
/// Written via n_f(a) - n_f(b) = -sinh(d) / (2 cosh(A) cosh(B)) with
/// A = a/2T, B = b/2T, d = A - B, in a form that neither overflows nor
/// cancels.
pub fn fermi_divided_difference(a: f64, b: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        if a == b {
            // -δ(a): zero away from the Fermi level.
            return 0.0;
        }
        return (fermi_occupation(a, 0.0) - fermi_occupation(b, 0.0)) / (a - b);
    }
    let half_beta = 0.5 / temperature;
    let (aa, bb) = ((a * half_beta).abs(), (b * half_beta).abs());
    let d = ((a - b) * half_beta).abs();
    let sinhc = if d < 1e-300 { 1.0 } else { -(-2.0 * d).exp_m1() / (2.0 * d) };
    let weight = (d - aa - bb).exp() / ((1.0 + (-2.0 * aa).exp()) * (1.0 + (-2.0 * bb).exp()));
    -sinhc * weight / temperature
}

/// Continuum electron-hole response √((m_s⁻¹ + m_p⁻¹)/(2Δ)) with m_ν⁻¹ = 2 t_ν.
pub fn continuum_chi0(params: &ModelParams) -> Result<f64> {
    if params.delta <= 0.0 {
        return Err(Error::Divergence {
            quantity: "continuum chi0",
            reason: format!("1/sqrt(delta) pole at delta = {}", params.delta),
        });
    }
    Ok(((params.t_s + params.t_p) / params.delta).sqrt())
}
