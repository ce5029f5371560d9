//! Monte Carlo estimates of the on-site couplings U, J, J′ from Coulomb
//! integrals over anisotropic p-type Wannier orbitals
//!
//! φ_ν(r) = N_ν r_ν exp(−ρ/2),  ρ = √((x/a⊥)² + (y/a⊥)² + (z/a∥)²).
//!
//! In scaled coordinates u = (x/a⊥, y/a⊥, z/a∥) the pair density
//! φ_ν φ_μ is u_ν u_μ e^{−ρ} / (32π a⊥² a∥). Sampling u from the isotropic
//! density ρ² e^{−ρ} / 96π (radius ~ Gamma(5), uniform direction) turns
//!
//! V_{1234} = 2 ∬ φ₁(r) φ₄(r) e²/|r − r′| φ₂(r′) φ₃(r′)
//!
//! into V = 18 e² E[û₁û₄ û′₂û′₃ / |r − r′|] with bounded angular weights.
//! Each draw is paired with its antithetic partner u′ → −u′.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Cartesian p-orbital. `Z` lies along the chain and plays the role of s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orbital {
    X,
    Y,
    Z,
}

impl Orbital {
    pub const ALL: [Orbital; 3] = [Orbital::X, Orbital::Y, Orbital::Z];

    pub fn axis(self) -> usize {
        match self {
            Orbital::X => 0,
            Orbital::Y => 1,
            Orbital::Z => 2,
        }
    }

    pub fn symbol(self) -> char {
        ['x', 'y', 'z'][self.axis()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WannierParams {
    pub a_perp: f64,
    pub a_par: f64,
    /// Coulomb scale e² in energy × length.
    pub e2: f64,
}

impl WannierParams {
    pub fn new(a_perp: f64, a_par: f64, e2: f64) -> Result<Self> {
        let p = WannierParams { a_perp, a_par, e2 };
        if !(a_perp > 0.0 && a_par > 0.0 && a_perp.is_finite() && a_par.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Wannier lengths must be positive, got a_perp = {a_perp}, a_par = {a_par}"
            )));
        }
        if !(e2 > 0.0 && e2.is_finite()) {
            return Err(Error::InvalidParameter(format!("e2 must be positive, got {e2}")));
        }
        Ok(p)
    }

    /// Geometry with √(a⊥ a∥) = 1 and e² = E₀, so energies come out in units of E₀.
    pub fn from_e0_zeta(e0: f64, zeta: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidParameter(format!("zeta must be positive, got {zeta}")));
        }
        Self::new(zeta.powf(-0.5), zeta.sqrt(), e0)
    }

    /// E₀ = e² / √(a⊥ a∥).
    pub fn e0(&self) -> f64 {
        self.e2 / (self.a_perp * self.a_par).sqrt()
    }

    /// ζ = a∥ / a⊥.
    pub fn zeta(&self) -> f64 {
        self.a_par / self.a_perp
    }

    fn scale(&self, orbital: Orbital) -> f64 {
        if orbital == Orbital::Z {
            self.a_par
        } else {
            self.a_perp
        }
    }

    /// N_ν from ∫ |φ_ν|² d³r = 1, i.e. N_ν² s_ν² = 1 / (32π a⊥² a∥).
    pub fn normalization(&self, orbital: Orbital) -> f64 {
        let s = self.scale(orbital);
        1.0 / (s * (32.0 * std::f64::consts::PI * self.a_perp * self.a_perp * self.a_par).sqrt())
    }
}

/// Normalized orbital amplitude φ_ν(r).
pub fn wannier_amplitude(orbital: Orbital, r: [f64; 3], params: &WannierParams) -> f64 {
    let rho = ((r[0] / params.a_perp).powi(2) + (r[1] / params.a_perp).powi(2) + (r[2] / params.a_par).powi(2)).sqrt();
    params.normalization(orbital) * r[orbital.axis()] * (-0.5 * rho).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    /// Total number of (r, r′) draws per element, antithetic partners included.
    pub n_samples: u64,
    pub seed: u64,
    /// Independent substreams; the reduction runs over them in index order.
    pub n_streams: u32,
    /// Largest accepted std_error / |value|.
    pub rel_error_bound: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            n_samples: 10_000_000,
            seed: 0,
            n_streams: 64,
            rel_error_bound: 0.05,
        }
    }
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 * self.n_streams as u64 || self.n_streams == 0 {
            return Err(Error::InvalidParameter(format!(
                "need at least two samples per stream (n_samples = {}, n_streams = {})",
                self.n_samples, self.n_streams
            )));
        }
        if !(self.rel_error_bound > 0.0) {
            return Err(Error::InvalidParameter("rel_error_bound must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    fn exact_zero(mc: &MonteCarloConfig) -> Self {
        MCEstimate { value: 0.0, std_error: 0.0, n_samples: 0, seed: mc.seed }
    }
}

/// True when some axis occurs an odd number of times among the four
/// orbitals: the joint reflection of r and r′ along it flips the integrand.
pub fn vanishes_by_symmetry(orbitals: [Orbital; 4]) -> bool {
    Orbital::ALL
        .iter()
        .any(|axis| orbitals.iter().filter(|o| *o == axis).count() % 2 == 1)
}

fn element_stream(orbitals: [Orbital; 4]) -> u64 {
    orbitals.iter().fold(0u64, |acc, o| acc * 3 + o.axis() as u64)
}

/// Radius ~ Gamma(5, 1) and an isotropic direction.
fn sample_point(rng: &mut ChaCha8Rng) -> (f64, [f64; 3]) {
    let mut prod = 1.0;
    for _ in 0..5 {
        prod *= 1.0 - rng.random::<f64>();
    }
    let rho = -prod.ln();
    let cos_t: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    (rho, [sin_t * phi.cos(), sin_t * phi.sin(), cos_t])
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }
}

/// Estimates V_{ν₁ν₂ν₃ν₄}, where ν₁, ν₄ share the coordinate r and ν₂, ν₃ share r′.
pub fn coulomb_matrix_element(orbitals: [Orbital; 4], params: &WannierParams, mc: &MonteCarloConfig) -> Result<MCEstimate> {
    mc.validate()?;
    if vanishes_by_symmetry(orbitals) {
        return Ok(MCEstimate::exact_zero(mc));
    }
    let [o1, o2, o3, o4] = orbitals.map(Orbital::axis);
    let (ap, az) = (params.a_perp, params.a_par);
    let pairs = mc.n_samples / 2;
    let streams = mc.n_streams as u64;
    let element = element_stream(orbitals);

    let per_stream: Vec<Moments> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(element * 4096 + s);
            let count = pairs / streams + u64::from(s < pairs % streams);
            let mut m = Moments::default();
            for _ in 0..count {
                let (r1, n1) = sample_point(&mut rng);
                let (r2, n2) = sample_point(&mut rng);
                let w = n1[o1] * n1[o4] * n2[o2] * n2[o3];
                let dist = |sign: f64| {
                    let dx = r1 * n1[0] - sign * r2 * n2[0];
                    let dy = r1 * n1[1] - sign * r2 * n2[1];
                    let dz = r1 * n1[2] - sign * r2 * n2[2];
                    (ap * ap * (dx * dx + dy * dy) + az * az * dz * dz).sqrt()
                };
                m.push(0.5 * w * (1.0 / dist(1.0) + 1.0 / dist(-1.0)));
            }
            m
        })
        .collect();
    let total = per_stream.into_iter().fold(Moments::default(), Moments::merge);

    let scale = 18.0 * params.e2;
    let variance = if total.n > 1 { total.m2 / (total.n - 1) as f64 } else { f64::NAN };
    let estimate = MCEstimate {
        value: scale * total.mean,
        std_error: scale * (variance / total.n as f64).sqrt(),
        n_samples: 2 * total.n,
        seed: mc.seed,
    };
    let rel = estimate.std_error / estimate.value.abs();
    if !(rel <= mc.rel_error_bound) {
        return Err(Error::MonteCarlo { rel_error: rel, bound: mc.rel_error_bound });
    }
    Ok(estimate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionEstimate {
    pub u: MCEstimate,
    pub j: MCEstimate,
    pub jp: MCEstimate,
    pub v_xzzx: MCEstimate,
    pub v_zxzx: MCEstimate,
    pub v_zzxx: MCEstimate,
}

fn combine(value: f64, std_error: f64, parts: &[MCEstimate]) -> MCEstimate {
    MCEstimate {
        value,
        std_error,
        n_samples: parts.iter().map(|p| p.n_samples).sum(),
        seed: parts[0].seed,
    }
}

/// U = V_xzzx + V_zxzx/2, J = −V_zxzx/2, J′ = V_zzxx with independent errors.
pub fn extract_couplings(v_xzzx: MCEstimate, v_zxzx: MCEstimate, v_zzxx: MCEstimate) -> InteractionEstimate {
    let u = combine(
        v_xzzx.value + 0.5 * v_zxzx.value,
        v_xzzx.std_error.hypot(0.5 * v_zxzx.std_error),
        &[v_xzzx, v_zxzx],
    );
    let j = combine(-0.5 * v_zxzx.value, 0.5 * v_zxzx.std_error, &[v_zxzx]);
    InteractionEstimate { u, j, jp: v_zzxx, v_xzzx, v_zxzx, v_zzxx }
}

/// Estimates the three elements entering U, J, J′.
pub fn estimate_couplings(params: &WannierParams, mc: &MonteCarloConfig) -> Result<InteractionEstimate> {
    use Orbital::{X, Z};
    let v_xzzx = coulomb_matrix_element([X, Z, Z, X], params, mc)?;
    let v_zxzx = coulomb_matrix_element([Z, X, Z, X], params, mc)?;
    let v_zzxx = coulomb_matrix_element([Z, Z, X, X], params, mc)?;
    Ok(extract_couplings(v_xzzx, v_zxzx, v_zzxx))
}

/// One ζ point in units of E₀.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaRow {
    pub zeta: f64,
    pub estimate: Option<InteractionEstimate>,
    pub error: Option<String>,
}

/// Couplings over a ζ grid at √(a⊥ a∥) = 1, reported as multiples of E₀.
pub fn zeta_sweep(e0: f64, zetas: &[f64], mc: &MonteCarloConfig) -> Result<Vec<ZetaRow>> {
    mc.validate()?;
    if !(e0 > 0.0 && e0.is_finite()) {
        return Err(Error::InvalidParameter(format!("E0 must be positive, got {e0}")));
    }
    let mut rows = Vec::with_capacity(zetas.len());
    for &zeta in zetas {
        let params = WannierParams::from_e0_zeta(e0, zeta)?;
        let unit = |e: MCEstimate| MCEstimate { value: e.value / e0, std_error: e.std_error / e0, ..e };
        rows.push(match estimate_couplings(&params, mc) {
            Ok(est) => ZetaRow {
                zeta,
                estimate: Some(InteractionEstimate {
                    u: unit(est.u),
                    j: unit(est.j),
                    jp: unit(est.jp),
                    v_xzzx: unit(est.v_xzzx),
                    v_zxzx: unit(est.v_zxzx),
                    v_zzxx: unit(est.v_zzxx),
                }),
                error: None,
            },
            Err(e) => ZetaRow { zeta, estimate: None, error: Some(e.to_string()) },
        });
    }
    Ok(rows)
}
