//! Ginzburg-Landau description of the spin-orbit order and the resulting
//! quasiparticle bands.
//!
//! The order parameter Φ_{m_s} is the expectation value of the spin-orbit
//! intertwined operator Ô_{m_s}. Its free energy
//!
//! F = −r Φ†Φ + c₀ (Φ†Φ)² − δ I₂ Σ m |Φ_m|²
//!
//! follows from a Hubbard-Stratonovich decoupling in the g = U − J − J′
//! channel. All integrals are zone averages of powers of the interband gap
//! D(k) = ε_p(k) − ε_s(k): I_n = ∫ dk/2π D⁻ⁿ.
//!
//! Ordering requires r > 0, i.e. g·I₁ > 1 for g > 0.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{rep::angular_index, PairMatrix, Spin};
use crate::model::{dispersion, Band, ModelParams};
use crate::quadrature::{zone_average, KGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GLCoefficients {
    /// Quadratic coefficient; r > 0 in the ordered phase.
    pub r: f64,
    pub c0: f64,
    /// Quartic coefficient of (Φ†LΦ)², identically zero.
    pub c2: f64,
    /// I₁ = ∫ dk/2π D⁻¹.
    pub chi_tilde: f64,
    /// I₂ = ∫ dk/2π D⁻², the weight of the Zeeman term.
    pub zeeman_integral: f64,
    pub r_error: f64,
    pub c0_error: f64,
}

/// Evaluates r = −g + g² I₁ and c₀ = ½ g⁴ I₃ by quadrature.
pub fn gl_coefficients(params: &ModelParams, grid: &KGrid) -> Result<GLCoefficients> {
    params.validate()?;
    if params.delta <= 0.0 {
        return Err(Error::Divergence {
            quantity: "Ginzburg-Landau coefficients",
            reason: "the interband gap closes at k = 0 when delta = 0".into(),
        });
    }
    let avg = zone_average(grid, |k| {
        let inv = 1.0 / params.interband_gap(k);
        [inv, inv * inv, inv * inv * inv]
    })?;
    let [i1, i2, i3] = avg.value;
    let g = params.coupling();
    Ok(GLCoefficients {
        r: -g + g * g * i1,
        c0: 0.5 * g.powi(4) * i3,
        c2: 0.0,
        chi_tilde: i1,
        zeeman_integral: i2,
        r_error: g * g * avg.error[0],
        c0_error: 0.5 * g.powi(4) * avg.error[2],
    })
}

/// Closed forms of I₁, I₂, I₃ for D(k) = a − b cos k with a = Δ + b, b = 2(t_s + t_p).
pub fn gap_moments_closed_form(params: &ModelParams) -> [f64; 3] {
    let b = 2.0 * (params.t_s + params.t_p);
    let a = params.delta + b;
    let s = a * a - b * b;
    [1.0 / s.sqrt(), a / s.powf(1.5), (2.0 * a * a + b * b) / (2.0 * s.powf(2.5))]
}

/// Minimizer √(r/2c₀) of −r x² + c₀ x⁴, or 0 in the disordered phase.
pub fn order_amplitude(coeffs: &GLCoefficients) -> Result<f64> {
    if coeffs.r <= 0.0 {
        return Ok(0.0);
    }
    if coeffs.c0 <= 0.0 || !coeffs.c0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "quartic coefficient must be positive in the ordered phase, got c0 = {}",
            coeffs.c0
        )));
    }
    Ok((coeffs.r / (2.0 * coeffs.c0)).sqrt())
}

/// Small-gap estimate |φ| ≈ g / (4 (t_s + t_p)), independent of Δ.
pub fn small_gap_amplitude(params: &ModelParams) -> f64 {
    0.25 * params.coupling() / (params.t_s + params.t_p)
}

/// Components (Φ₊₁, Φ₀, Φ₋₁).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderParameter {
    pub phi: [Complex64; 3],
}

impl OrderParameter {
    pub fn zero() -> Self {
        OrderParameter { phi: [Complex64::new(0.0, 0.0); 3] }
    }

    /// The state (φ, 0, 0).
    pub fn polarized_up(phi: Complex64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        OrderParameter { phi: [phi, z, z] }
    }

    /// The state (0, 0, φ).
    pub fn polarized_down(phi: Complex64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        OrderParameter { phi: [z, z, phi] }
    }

    pub fn component(&self, m_s: i8) -> Complex64 {
        self.phi[(1 - m_s) as usize]
    }

    /// √(Φ†Φ).
    pub fn amplitude(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.phi.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Σ m |Φ_m|².
    pub fn magnetization(&self) -> f64 {
        self.phi[0].norm_sqr() - self.phi[2].norm_sqr()
    }
}

/// Free energy density including the Zeeman term.
pub fn free_energy(phi: &OrderParameter, coeffs: &GLCoefficients, delta_zeeman: f64) -> f64 {
    let n = phi.norm_sqr();
    -coeffs.r * n + coeffs.c0 * n * n - delta_zeeman * phi.magnetization() * coeffs.zeeman_integral
}

/// Ordered state selected by the Zeeman term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZeemanState {
    Selected { order: OrderParameter, energy_shift: f64 },
    /// δ = 0: every state with the given amplitude is degenerate.
    Degenerate { amplitude: f64 },
}

/// Picks the m_s = ±1 state favoured by δ; the overall phase is fixed to 0.
pub fn zeeman_selection(coeffs: &GLCoefficients, delta_zeeman: f64) -> Result<ZeemanState> {
    let amplitude = order_amplitude(coeffs)?;
    let phi = Complex64::new(amplitude, 0.0);
    let order = if delta_zeeman > 0.0 {
        OrderParameter::polarized_up(phi)
    } else if delta_zeeman < 0.0 {
        OrderParameter::polarized_down(phi)
    } else {
        return Ok(ZeemanState::Degenerate { amplitude });
    };
    Ok(ZeemanState::Selected {
        order,
        energy_shift: -delta_zeeman * order.magnetization() * coeffs.zeeman_integral,
    })
}

/// Single-particle mean-field Hamiltonian in the (q, σ) basis of
/// [`angular_index`] at momentum k.
///
/// The band part is diag(ε_p, ε_s, ε_p) for q = (+1, 0, −1). The order couples
/// (q=0,↑)–(q=+1,↓) and (q=−1,↑)–(q=0,↓) with amplitude i g Φ₊₁ / √2, which is
/// (g / 4√2)(i φ Ψ† σ₊⊗L₋ Ψ + h.c.).
pub fn mean_field_hamiltonian(k: f64, params: &ModelParams, order: &OrderParameter) -> PairMatrix {
    let mut h = PairMatrix::zeros();
    let e_s = dispersion(params, Band::S, k);
    let e_p = dispersion(params, Band::Px, k);
    for q in -1i8..=1 {
        for s in Spin::ALL {
            let i = angular_index(q, s);
            h[(i, i)] = Complex64::new(if q == 0 { e_s } else { e_p }, 0.0);
        }
    }
    let c = Complex64::new(0.0, params.coupling() / std::f64::consts::SQRT_2) * order.component(1);
    for (row, col) in [
        (angular_index(0, Spin::Up), angular_index(1, Spin::Down)),
        (angular_index(-1, Spin::Up), angular_index(0, Spin::Down)),
    ] {
        h[(row, col)] = c;
        h[(col, row)] = c.conj();
    }
    h
}

/// λ_so = D/2 − √(D²/4 + x²/2) with x = g|φ|, in a cancellation-free form.
fn soi_from_gap(gap: f64, coupling_amplitude: f64) -> f64 {
    let x2 = 0.5 * coupling_amplitude * coupling_amplitude;
    if x2 == 0.0 {
        return 0.0;
    }
    let root = (0.25 * gap * gap + x2).sqrt();
    -x2 / (0.5 * gap + root)
}

/// Momentum-resolved induced spin-orbit strength λ_so(k) ≤ 0.
pub fn soi_strength_k(k: f64, params: &ModelParams, phi_amp: f64) -> f64 {
    soi_from_gap(params.interband_gap(k), params.coupling() * phi_amp)
}

/// λ_so at the band edge k = 0, Δ/2 − √(Δ²/4 + g²|φ|²/2).
pub fn soi_band_edge(params: &ModelParams, phi_amp: f64) -> f64 {
    soi_strength_k(0.0, params, phi_amp)
}

/// Analytic quasiparticle data at one momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiparticleBand {
    pub k: f64,
    /// Ascending energies.
    pub energies: [f64; 6],
    pub lambda_so: f64,
    /// Mixing angle ϑ_k with cos ϑ = D/R, sin ϑ = √2 g|φ|/R, R = √(D² + 2g²|φ|²).
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiparticleSpectrum {
    pub order: OrderParameter,
    /// Phase ϕ = arg(conj(−i g φ)); equals arg(−iφ*) for g > 0.
    pub phase: f64,
    pub bands: Vec<QuasiparticleBand>,
}

fn coupling_element(params: &ModelParams, order: &OrderParameter) -> Complex64 {
    Complex64::new(0.0, params.coupling() / std::f64::consts::SQRT_2) * order.component(1)
}

/// Energies from the 2×2 s–p rotations: ε_p twice, ε_p − λ_so twice, ε_s + λ_so twice.
pub fn quasiparticle_band(k: f64, params: &ModelParams, order: &OrderParameter) -> QuasiparticleBand {
    let e_s = dispersion(params, Band::S, k);
    let e_p = dispersion(params, Band::Px, k);
    let gap = e_p - e_s;
    let x = params.coupling() * order.component(1).norm();
    let lambda = soi_from_gap(gap, x);
    let mut energies = [e_p, e_p, e_p - lambda, e_p - lambda, e_s + lambda, e_s + lambda];
    energies.sort_by(f64::total_cmp);
    let theta = (std::f64::consts::SQRT_2 * x.abs()).atan2(gap);
    QuasiparticleBand { k, energies, lambda_so: lambda, theta }
}

pub fn quasiparticle_spectrum(params: &ModelParams, order: &OrderParameter, ks: &[f64]) -> QuasiparticleSpectrum {
    let bands = ks.par_iter().map(|&k| quasiparticle_band(k, params, order)).collect();
    QuasiparticleSpectrum {
        order: *order,
        phase: coupling_element(params, order).conj().arg(),
        bands,
    }
}

/// Unitary Q whose rows are the quasiparticle modes: ψ̃ = Q ψ, so that
/// Q H Q† is diagonal with the ε_p, ε_p − λ_so, ε_s + λ_so pattern.
///
/// Block (ψ_{+↓}, ψ_{0↑}) uses the rotation (cos, e^{iϕ} sin; −e^{−iϕ} sin, cos)
/// up to row phases; block (ψ_{0↓}, ψ_{−↑}) uses the conjugate phase.
pub fn quasiparticle_transform(k: f64, params: &ModelParams, order: &OrderParameter) -> PairMatrix {
    let band = quasiparticle_band(k, params, order);
    let c = coupling_element(params, order);
    let varphi = c.conj().arg();
    let (sin, cos) = (0.5 * band.theta).sin_cos();
    let e = |a: f64| Complex64::from_polar(1.0, a);
    let mut q = PairMatrix::zeros();
    let one = Complex64::new(1.0, 0.0);
    let (pu, pd) = (angular_index(1, Spin::Up), angular_index(1, Spin::Down));
    let (zu, zd) = (angular_index(0, Spin::Up), angular_index(0, Spin::Down));
    let (mu, md) = (angular_index(-1, Spin::Up), angular_index(-1, Spin::Down));
    q[(pu, pu)] = one;
    q[(md, md)] = one;
    // ψ̃_{0↓}, ψ̃_{−↑}
    q[(zd, zd)] = e(-0.5 * varphi) * cos;
    q[(zd, mu)] = -e(0.5 * varphi) * sin;
    q[(mu, zd)] = e(-0.5 * varphi) * sin;
    q[(mu, mu)] = e(0.5 * varphi) * cos;
    // ψ̃_{+↓}, ψ̃_{0↑}
    q[(pd, pd)] = e(-0.5 * varphi) * cos;
    q[(pd, zu)] = e(0.5 * varphi) * sin;
    q[(zu, pd)] = -e(-0.5 * varphi) * sin;
    q[(zu, zu)] = e(0.5 * varphi) * cos;
    q
}

/// Ascending eigenvalues of the mean-field Hamiltonian from a dense solver.
pub fn numerical_spectrum(k: f64, params: &ModelParams, order: &OrderParameter) -> [f64; 6] {
    let eig = SymmetricEigen::new(mean_field_hamiltonian(k, params, order));
    let mut out = [0.0; 6];
    out.copy_from_slice(eig.eigenvalues.as_slice());
    out.sort_by(f64::total_cmp);
    out
}
