//! Channel-resolved static susceptibilities assembled from the flowed vertex.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubble::BubbleTable;
use crate::channels::{ChannelCombination, ChannelLabel, PairMatrix};
use crate::flow::{integrate_flow, FlowMode, FlowSettings, FlowTrajectory};
use crate::model::{continuum_chi0, ModelParams};
use crate::quadrature::KGrid;
use crate::vertex::VertexTensor;
use crate::{Error, Result};

/// A channel is flagged divergent at a diverged flow if its susceptibility at
/// the truncated vertex reaches this fraction of the largest positive one.
pub const DIVERGENCE_RATIO: f64 = 0.1;

const DIM: usize = 6;

fn idx(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * DIM + b) * DIM + c) * DIM + d
}

/// χ_{1,2;3,4} over spin-orbitals a = 2ν + σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityTensor {
    pub values: Vec<Complex64>,
}

impl SusceptibilityTensor {
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        self.values[idx(a, b, c, d)]
    }

    /// χ = −δ_{13}δ_{24} Π_{ν₁ν₂} − Γ_{1234} Π_{ν₁ν₄} Π_{ν₂ν₃} with particle-hole bubbles `ph`.
    pub fn assemble(vertex: &VertexTensor, ph: &[[f64; 3]; 3]) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); DIM.pow(4)];
        let split = |a: usize| (a / 2, a % 2);
        for a in 0..DIM {
            for b in 0..DIM {
                for c in 0..DIM {
                    for d in 0..DIM {
                        let (n1, s1) = split(a);
                        let (n2, s2) = split(b);
                        let (n3, s3) = split(c);
                        let (n4, s4) = split(d);
                        let mut chi = 0.0;
                        if a == c && b == d {
                            chi -= ph[n1][n2];
                        }
                        let gamma = vertex.gamma([(n1, s1), (n2, s2), (n3, s3), (n4, s4)]);
                        if gamma != 0.0 {
                            chi -= gamma * ph[n1][n4] * ph[n2][n3];
                        }
                        values[idx(a, b, c, d)] = Complex64::new(chi, 0.0);
                    }
                }
            }
        }
        SusceptibilityTensor { values }
    }

    /// max |χ_{1234} − χ*_{3412}|, the deviation from Hermiticity as a
    /// matrix between the pairs (4,1) and (2,3).
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..DIM {
            for b in 0..DIM {
                for c in 0..DIM {
                    for d in 0..DIM {
                        let diff = self.get(a, b, c, d) - self.get(c, d, a, b).conj();
                        worst = worst.max(diff.norm());
                    }
                }
            }
        }
        worst
    }

    /// Σ M_L[4,1] M_R*[2,3] χ_{1234} for two channel coefficient matrices.
    pub fn project(&self, left: &PairMatrix, right: &PairMatrix) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for d in 0..DIM {
            for a in 0..DIM {
                let l = left[(d, a)];
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..DIM {
                    for c in 0..DIM {
                        let r = right[(b, c)];
                        if r != Complex64::new(0.0, 0.0) {
                            acc += l * r.conj() * self.get(a, b, c, d);
                        }
                    }
                }
            }
        }
        acc
    }

    /// χ(i, j) between two basis channels.
    pub fn label_element(&self, left: ChannelLabel, right: ChannelLabel) -> Result<Complex64> {
        Ok(self.project(
            &crate::channels::channel_projector(left)?,
            &crate::channels::channel_projector(right)?,
        ))
    }

    /// Susceptibility of a normalized combination Σ w_i B_i.
    ///
    /// Checks at runtime that the result is real and that the block entries
    /// of two-term combinations obey χ(0,0) = χ(1,1), χ(0,1) = χ(1,0).
    pub fn channel(&self, combo: &ChannelCombination) -> Result<f64> {
        let m = combo.matrix();
        let value = self.project(&m, &m);
        let scale = self.values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        if value.im.abs() > 1e-9 * scale {
            return Err(Error::ChannelSymmetry(format!(
                "channel {} has imaginary susceptibility {:e}",
                combo.name, value.im
            )));
        }
        if combo.terms.len() == 2 {
            let (l0, l1) = (combo.terms[0].0, combo.terms[1].0);
            let c00 = self.label_element(l0, l0)?;
            let c11 = self.label_element(l1, l1)?;
            let c01 = self.label_element(l0, l1)?;
            let c10 = self.label_element(l1, l0)?;
            if (c00 - c11).norm() > 1e-9 * scale || (c01 - c10).norm() > 1e-9 * scale {
                return Err(Error::ChannelSymmetry(format!(
                    "block identities fail for {}: chi00 = {c00}, chi11 = {c11}, chi01 = {c01}, chi10 = {c10}",
                    combo.name
                )));
            }
        }
        Ok(value.re)
    }
}

/// Particle-hole bubbles at the initial cutoff.
pub fn initial_bubbles(params: &ModelParams, lambda0: f64, grid: &KGrid) -> Result<BubbleTable> {
    BubbleTable::values(params, lambda0, grid)
}

/// Susceptibility tensor for a final vertex, using bubbles at Λ₀.
pub fn full_susceptibility(
    vertex: &VertexTensor,
    params: &ModelParams,
    lambda0: f64,
    grid: &KGrid,
) -> Result<SusceptibilityTensor> {
    let table = initial_bubbles(params, lambda0, grid)?;
    Ok(SusceptibilityTensor::assemble(vertex, &table.ph))
}

pub fn channel_susceptibility(chi: &SusceptibilityTensor, combo: &ChannelCombination) -> Result<f64> {
    chi.channel(combo)
}

/// Value of one channel after a flow. Divergent channels carry no value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelValue {
    pub channel: String,
    pub chi: Option<f64>,
    pub diverged: bool,
    pub l_div: Option<f64>,
}

/// Flow plus channel evaluation at one parameter point.
#[derive(Debug, Clone)]
pub struct ChannelEvaluation {
    pub trajectory: FlowTrajectory,
    pub values: Vec<ChannelValue>,
    /// Largest χ among basis channels and requested combinations.
    pub leading_chi: f64,
}

/// Runs the flow and evaluates each requested channel.
///
/// If the flow diverges, all channels are evaluated at the truncated vertex;
/// those reaching [`DIVERGENCE_RATIO`] times the largest positive susceptibility
/// are flagged divergent, the rest keep their finite value. A large negative
/// value at the truncated vertex marks a suppressed channel, not an instability.
pub fn evaluate_channels(
    params: &ModelParams,
    settings: &FlowSettings,
    channels: &[ChannelCombination],
) -> Result<ChannelEvaluation> {
    let trajectory = integrate_flow(params, settings)?;
    let chi = full_susceptibility(trajectory.final_vertex(), params, settings.lambda0, &settings.grid())?;
    let requested: Vec<f64> = channels.iter().map(|c| chi.channel(c)).collect::<Result<_>>()?;
    let mut leading = requested.iter().fold(0.0f64, |m, v| m.max(*v));
    for label in ChannelLabel::all() {
        leading = leading.max(chi.label_element(label, label)?.re);
    }
    let l_div = trajectory.l_div();
    let values = channels
        .iter()
        .zip(requested)
        .map(|(c, v)| {
            let diverged = l_div.is_some() && v >= DIVERGENCE_RATIO * leading;
            ChannelValue {
                channel: c.name.clone(),
                chi: if diverged { None } else { Some(v) },
                diverged,
                l_div: if diverged { l_div } else { None },
            }
        })
        .collect();
    Ok(ChannelEvaluation {
        trajectory,
        values,
        leading_chi: leading,
    })
}

/// χ of the spin-orbit channel Ô_{m_s=+1} after a flow.
pub fn chi_spin_orbit(params: &ModelParams, settings: &FlowSettings) -> Result<ChannelValue> {
    let eval = evaluate_channels(params, settings, &[ChannelCombination::spin_orbit(1)])?;
    Ok(eval.values.into_iter().next().expect("one channel"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chi0Source {
    /// −Π^ph_sp on the lattice at the given cutoff.
    Lattice,
    /// Continuum √((t_s + t_p)/Δ).
    Continuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpaValue {
    pub chi0: f64,
    pub coupling: f64,
    /// None when (U − J) χ⁰ ≥ 1.
    pub chi: Option<f64>,
}

/// χ_SO = χ⁰/(1 − (U − J)χ⁰), neglecting J′. `lambda` is the cutoff of the
/// lattice bubble (`f64::INFINITY` for the full bubble).
pub fn chi_rpa(params: &ModelParams, source: Chi0Source, lambda: f64, grid: &KGrid) -> Result<RpaValue> {
    params.validate()?;
    let chi0 = match source {
        Chi0Source::Lattice => -BubbleTable::values(params, lambda, grid)?.ph[0][1],
        Chi0Source::Continuum => continuum_chi0(params)?,
    };
    let coupling = params.u - params.j;
    let denom = 1.0 - coupling * chi0;
    Ok(RpaValue {
        chi0,
        coupling,
        chi: if denom > 0.0 { Some(chi0 / denom) } else { None },
    })
}

/// Settings shared by all points of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub k_points: usize,
    pub l_max: f64,
    pub ode_tolerance: f64,
    pub mode: FlowMode,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            k_points: 512,
            l_max: 30.0,
            ode_tolerance: 1e-6,
            mode: FlowMode::Full,
        }
    }
}

impl SweepSettings {
    /// Flow settings for one point; Λ₀ and the threshold follow its bandwidth.
    pub fn flow_settings(&self, params: &ModelParams) -> FlowSettings {
        let mut s = FlowSettings::for_params(params).with_k_points(self.k_points).with_mode(self.mode);
        s.l_max = self.l_max;
        s.ode_tolerance = self.ode_tolerance;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub temperature: f64,
    pub delta: f64,
    pub channel: String,
    pub chi: Option<f64>,
    pub diverged: bool,
    pub l_div: Option<f64>,
    /// Failure message when the point could not be computed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub params: ModelParams,
    pub settings: SweepSettings,
    pub channels: Vec<ChannelCombination>,
    /// Sorted by (channel order, delta, temperature).
    pub rows: Vec<SweepRow>,
    /// Largest relative RHS leakage over all flows of the sweep.
    pub max_rhs_leakage: f64,
}

/// Runs one flow per (Δ, T) and evaluates every channel. Failed points are
/// recorded per row and do not stop the sweep.
pub fn temperature_sweep(
    params: &ModelParams,
    t_grid: &[f64],
    delta_grid: &[f64],
    channels: &[ChannelCombination],
    settings: &SweepSettings,
) -> Result<SweepResult> {
    if t_grid.is_empty() || delta_grid.is_empty() || channels.is_empty() {
        return Err(Error::InvalidParameter("sweep grids and channel list must be non-empty".into()));
    }
    if t_grid.iter().chain(delta_grid).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("sweep grid values must be positive".into()));
    }
    let mut points = Vec::with_capacity(t_grid.len() * delta_grid.len());
    for &delta in delta_grid {
        for &t in t_grid {
            points.push(params.with_delta(delta).with_temperature(t));
        }
    }
    points.iter().try_for_each(|p| p.validate())?;

    let outcomes: Vec<Result<ChannelEvaluation>> = points
        .par_iter()
        .map(|p| evaluate_channels(p, &settings.flow_settings(p), channels))
        .collect();

    let mut rows = Vec::with_capacity(points.len() * channels.len());
    let mut max_rhs_leakage = 0.0f64;
    for (ci, combo) in channels.iter().enumerate() {
        for (p, outcome) in points.iter().zip(&outcomes) {
            let row = match outcome {
                Ok(eval) => {
                    max_rhs_leakage = max_rhs_leakage.max(eval.trajectory.max_rhs_leakage);
                    let v = &eval.values[ci];
                    SweepRow {
                        temperature: p.temperature,
                        delta: p.delta,
                        channel: combo.name.clone(),
                        chi: v.chi,
                        diverged: v.diverged,
                        l_div: v.l_div,
                        error: None,
                    }
                }
                Err(e) => SweepRow {
                    temperature: p.temperature,
                    delta: p.delta,
                    channel: combo.name.clone(),
                    chi: None,
                    diverged: false,
                    l_div: None,
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    let order = |name: &str| channels.iter().position(|c| c.name == name).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        order(&a.channel)
            .cmp(&order(&b.channel))
            .then(a.delta.total_cmp(&b.delta))
            .then(a.temperature.total_cmp(&b.temperature))
    });
    Ok(SweepResult {
        params: *params,
        settings: *settings,
        channels: channels.to_vec(),
        rows,
        max_rhs_leakage,
    })
}

/// Whether the flow at temperature T diverges and, if a channel is given,
/// flags that channel.
fn diverges_at(params: &ModelParams, t: f64, settings: &SweepSettings, channel: Option<&ChannelCombination>) -> Result<bool> {
    let p = params.with_temperature(t);
    let fs = settings.flow_settings(&p);
    match channel {
        None => Ok(integrate_flow(&p, &fs)?.diverged()),
        Some(c) => Ok(evaluate_channels(&p, &fs, std::slice::from_ref(c))?.values[0].diverged),
    }
}

/// Highest temperature in [t_lo, t_hi] at which the flow diverges (in the given
/// channel, if any), located by bisection in log T to relative width `rel_tol`.
/// Returns None if the flow is finite at t_lo.
pub fn divergence_temperature(
    params: &ModelParams,
    settings: &SweepSettings,
    channel: Option<&ChannelCombination>,
    t_lo: f64,
    t_hi: f64,
    rel_tol: f64,
) -> Result<Option<f64>> {
    if !(t_lo > 0.0 && t_hi > t_lo) || !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter("need 0 < t_lo < t_hi and rel_tol > 0".into()));
    }
    if !diverges_at(params, t_lo, settings, channel)? {
        return Ok(None);
    }
    if diverges_at(params, t_hi, settings, channel)? {
        return Ok(Some(t_hi));
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    while hi / lo > 1.0 + rel_tol {
        let mid = (lo * hi).sqrt();
        if diverges_at(params, mid, settings, channel)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vertex::VertexClass;

    fn params() -> ModelParams {
        ModelParams::new(2.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0).unwrap()
    }

    fn ph_table() -> [[f64; 3]; 3] {
        BubbleTable::values(&params(), f64::INFINITY, &KGrid::default()).unwrap().ph
    }

    #[test]
    fn free_tensor_is_diagonal() {
        let ph = ph_table();
        let chi = SusceptibilityTensor::assemble(&VertexTensor::zeros(), &ph);
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    for d in 0..6 {
                        let expected = if a == c && b == d { -ph[a / 2][b / 2] } else { 0.0 };
                        assert_eq!(chi.get(a, b, c, d).re, expected);
                    }
                }
            }
        }
    }

    #[test]
    fn free_channels_are_non_negative() {
        let chi = SusceptibilityTensor::assemble(&VertexTensor::zeros(), &ph_table());
        for l in ChannelLabel::all() {
            let v = chi.label_element(l, l).unwrap();
            assert!(v.re >= 0.0 && v.im.abs() < 1e-15, "{l}: {v}");
        }
        let so = chi.channel(&ChannelCombination::spin_orbit(1)).unwrap();
        assert!((so - 1.0 / 13f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spin_orbit_channel_closed_form() {
        let ph = ph_table();
        let chi0 = -ph[0][1];
        let mut v = VertexTensor::zeros();
        v.set_class(VertexClass::Xssx, 0.7);
        v.set_class(VertexClass::Ssxx, -0.3);
        v.set_class(VertexClass::Sxsx, 0.4);
        v.set_class(VertexClass::Xxxx, 0.2);
        let chi = SusceptibilityTensor::assemble(&v, &ph);
        assert!(chi.hermiticity_defect() < 1e-12);
        let so = chi.channel(&ChannelCombination::spin_orbit(1)).unwrap();
        let odd = chi.channel(&ChannelCombination::spin_orbit_trs_odd(1)).unwrap();
        let v_sxxs = v.get(0, 1, 1, 0);
        let v_xxss = v.get(1, 1, 0, 0);
        assert!((so - (chi0 + (v_sxxs - v_xxss) * chi0 * chi0)).abs() < 1e-12);
        assert!((odd - (chi0 + (v_sxxs + v_xxss) * chi0 * chi0)).abs() < 1e-12);
        for m in [-1, 0] {
            let other = chi.channel(&ChannelCombination::spin_orbit(m)).unwrap();
            assert!((other - so).abs() < 1e-12);
        }
    }

    #[test]
    fn rpa_examples() {
        let p = params().with_couplings(2.0, 0.0, 0.0);
        let r = chi_rpa(&p, Chi0Source::Lattice, f64::INFINITY, &KGrid::default()).unwrap();
        let chi0 = 1.0 / 13f64.sqrt();
        assert!((r.chi.unwrap() - chi0 / (1.0 - 2.0 * chi0)).abs() < 1e-12);
        assert!((r.chi.unwrap() - 0.622_839_030_607_11).abs() < 1e-12);
        let p = params().with_couplings(1.5, 1.5, 0.0);
        let r = chi_rpa(&p, Chi0Source::Lattice, f64::INFINITY, &KGrid::default()).unwrap();
        assert_eq!(r.chi, Some(r.chi0));
        let p = params().with_couplings(13f64.sqrt(), 0.0, 0.0);
        let r = chi_rpa(&p, Chi0Source::Lattice, f64::INFINITY, &KGrid::default()).unwrap();
        assert!(r.chi.is_none() || r.chi.unwrap() > 1e10);
    }
}
