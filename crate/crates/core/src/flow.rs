//! One-loop flow of the local vertex under the soft cutoff Λ = Λ₀ e^{−l}.

use serde::{Deserialize, Serialize};

use crate::bubble::BubbleTable;
use crate::model::ModelParams;
use crate::ode::{Stepper, Tolerances};
use crate::quadrature::KGrid;
use crate::vertex::{VertexClass, VertexTensor};
use crate::{Error, Result};

/// RHS leakage (relative to max|∂_l V|) that aborts the flow.
pub const LEAKAGE_ABORT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffState {
    pub lambda0: f64,
    pub l: f64,
    pub lambda: f64,
}

impl CutoffState {
    pub fn new(lambda0: f64, l: f64) -> Self {
        CutoffState {
            lambda0,
            l,
            lambda: lambda0 * (-l).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    /// Every term of the one-loop equation.
    Full,
    /// Only the interband particle-hole bubble, which carries the Δ^{-1/2} divergence.
    DivergentOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSettings {
    pub k_points: usize,
    pub l_max: f64,
    /// Absolute threshold on max|V|.
    pub divergence_threshold: f64,
    pub ode_tolerance: f64,
    pub lambda0: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub mode: FlowMode,
}

impl FlowSettings {
    /// Λ₀ = 100 W, threshold = 1000 W, with W the total bandwidth.
    pub fn for_params(params: &ModelParams) -> Self {
        let w = params.bandwidth();
        FlowSettings {
            k_points: 512,
            l_max: 30.0,
            divergence_threshold: 1e3 * w,
            ode_tolerance: 1e-6,
            lambda0: 100.0 * w,
            initial_step: 1e-2,
            max_step: 0.25,
            mode: FlowMode::Full,
        }
    }

    pub fn with_k_points(mut self, k_points: usize) -> Self {
        self.k_points = k_points;
        self
    }

    pub fn with_mode(mut self, mode: FlowMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let w = params.bandwidth();
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.k_points < 64 {
            return bad(format!("k_points must be >= 64, got {}", self.k_points));
        }
        if !(self.l_max > 0.0) || !self.l_max.is_finite() {
            return bad(format!("l_max must be positive and finite, got {}", self.l_max));
        }
        if !(self.divergence_threshold >= 100.0 * w) {
            return bad(format!(
                "divergence threshold {} is below 100 x bandwidth ({})",
                self.divergence_threshold,
                100.0 * w
            ));
        }
        if !(self.lambda0 >= 10.0 * w) || !self.lambda0.is_finite() {
            return bad(format!("lambda0 {} is below 10 x bandwidth ({})", self.lambda0, 10.0 * w));
        }
        if !(self.ode_tolerance > 0.0 && self.ode_tolerance < 0.1) {
            return bad(format!("ode tolerance must lie in (0, 0.1), got {}", self.ode_tolerance));
        }
        if !(self.initial_step > 0.0 && self.max_step >= self.initial_step) {
            return bad("step sizes must satisfy 0 < initial_step <= max_step".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> KGrid {
        KGrid::with_points(self.k_points)
    }
}

/// V_ssxx = J′, V_sxsx = −2J, V_xssx = U − J, all other classes zero.
pub fn initial_vertex(params: &ModelParams) -> VertexTensor {
    let mut v = VertexTensor::zeros();
    v.set_class(VertexClass::Ssxx, params.jp);
    v.set_class(VertexClass::Sxsx, -2.0 * params.j);
    v.set_class(VertexClass::Xssx, params.u - params.j);
    v
}

/// One-loop contraction for given bubble derivatives, before projection.
pub fn contract(v: &VertexTensor, pp: &[[f64; 3]; 3], ph: &[[f64; 3]; 3]) -> VertexTensor {
    let mut out = VertexTensor::zeros();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let mut acc = 0.0;
                    for n in 0..3 {
                        for m in 0..3 {
                            let dpp = pp[n][m];
                            let dph = ph[n][m];
                            if dpp != 0.0 {
                                acc -= dpp * v.get(a, b, n, m) * v.get(n, m, c, d);
                            }
                            if dph != 0.0 {
                                let crossed = v.get(a, m, n, d);
                                acc += 2.0 * dph * crossed * v.get(n, b, c, m);
                                acc -= dph
                                    * (v.get(a, n, c, m) * v.get(m, b, n, d)
                                        + v.get(n, b, c, m) * v.get(m, a, n, d)
                                        + crossed * v.get(b, n, c, m));
                            }
                        }
                    }
                    out.set(a, b, c, d, acc);
                }
            }
        }
    }
    out
}

fn mode_filter(table: &BubbleTable, mode: FlowMode) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    match mode {
        FlowMode::Full => (table.pp, table.ph),
        FlowMode::DivergentOnly => {
            let mut ph = [[0.0; 3]; 3];
            for n in 0..3 {
                for m in 0..3 {
                    if (n == 0) != (m == 0) {
                        ph[n][m] = table.ph[n][m];
                    }
                }
            }
            ([[0.0; 3]; 3], ph)
        }
    }
}

/// Relative leakage of an unprojected right-hand side.
fn relative_leakage(raw: &VertexTensor) -> f64 {
    let scale = raw.max_abs();
    if scale == 0.0 {
        0.0
    } else {
        raw.leakage() / scale
    }
}

/// ∂_l V at cutoff Λ, projected onto the eight classes.
///
/// Fails with [`Error::SymmetryLeakage`] if the raw contraction leaves the
/// class subspace by more than [`LEAKAGE_ABORT`] relative to its size.
pub fn flow_rhs(
    vertex: &VertexTensor,
    lambda: f64,
    params: &ModelParams,
    grid: &KGrid,
    mode: FlowMode,
) -> Result<VertexTensor> {
    let table = BubbleTable::scale_derivatives(params, lambda, grid)?;
    let (pp, ph) = mode_filter(&table, mode);
    let raw = contract(vertex, &pp, &ph);
    let leak = relative_leakage(&raw);
    if leak > LEAKAGE_ABORT {
        return Err(Error::SymmetryLeakage { leakage: leak, l: f64::NAN });
    }
    Ok(raw.project())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub l: f64,
    pub lambda: f64,
    pub vertex: VertexTensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Converged,
    Diverged { component: VertexClass, l_div: f64 },
    MaxLReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub params: ModelParams,
    pub settings: FlowSettings,
    /// Accepted integrator points, starting with l = 0.
    pub samples: Vec<FlowSample>,
    pub termination: Termination,
    /// Largest relative leakage of the unprojected right-hand side at any accepted point.
    pub max_rhs_leakage: f64,
    /// Largest leakage of the vertex itself over the accepted points.
    pub max_vertex_leakage: f64,
    pub rhs_evaluations: usize,
}

impl FlowTrajectory {
    pub fn final_sample(&self) -> &FlowSample {
        self.samples.last().expect("trajectory holds at least the initial point")
    }

    pub fn final_vertex(&self) -> &VertexTensor {
        &self.final_sample().vertex
    }

    pub fn diverged(&self) -> bool {
        matches!(self.termination, Termination::Diverged { .. })
    }

    pub fn l_div(&self) -> Option<f64> {
        match self.termination {
            Termination::Diverged { l_div, .. } => Some(l_div),
            _ => None,
        }
    }
}

/// Integrates the flow from l = 0 until convergence, divergence or l_max.
pub fn integrate_flow(params: &ModelParams, settings: &FlowSettings) -> Result<FlowTrajectory> {
    params.validate()?;
    settings.validate(params)?;
    let grid = settings.grid();
    let lambda0 = settings.lambda0;
    let lambda_of = |l: f64| lambda0 * (-l).exp();

    let mut evaluations = 0usize;
    let mut max_rhs_leakage = 0.0f64;
    let mut rhs = |l: f64, y: &[f64; 81]| -> Result<[f64; 81]> {
        evaluations += 1;
        let v = VertexTensor { v: *y };
        let table = BubbleTable::scale_derivatives(params, lambda_of(l), &grid)?;
        let (pp, ph) = mode_filter(&table, settings.mode);
        let raw = contract(&v, &pp, &ph);
        let leak = relative_leakage(&raw);
        if leak > LEAKAGE_ABORT {
            return Err(Error::SymmetryLeakage { leakage: leak, l });
        }
        max_rhs_leakage = max_rhs_leakage.max(leak);
        Ok(raw.project().v)
    };

    let v0 = initial_vertex(params);
    let mut samples = vec![FlowSample {
        l: 0.0,
        lambda: lambda0,
        vertex: v0,
    }];
    let mut max_vertex_leakage = v0.leakage();
    let tol = Tolerances {
        rtol: settings.ode_tolerance,
        atol: settings.ode_tolerance * 1e-4,
        h_max: settings.max_step,
    };
    let mut stepper = Stepper::<81>::new(tol, settings.initial_step);
    let (mut l, mut y) = (0.0, v0.v);
    let mut dydt = rhs(l, &y)?;
    let scale = params.delta.max(params.temperature) / 40.0;

    let termination = loop {
        if l >= settings.l_max {
            break Termination::MaxLReached;
        }
        let acc = stepper.step(&mut rhs, l, &y, &dydt, settings.l_max, lambda_of)?;
        l = acc.t;
        y = acc.y;
        dydt = acc.dydt;
        let v = VertexTensor { v: y };
        max_vertex_leakage = max_vertex_leakage.max(v.leakage());
        samples.push(FlowSample {
            l,
            lambda: lambda_of(l),
            vertex: v,
        });
        let max_v = v.max_abs();
        if max_v > settings.divergence_threshold {
            break Termination::Diverged {
                component: v.dominant_class(),
                l_div: l,
            };
        }
        let max_rate = dydt.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if lambda_of(l) < scale && max_rate < settings.ode_tolerance * max_v.max(1.0) {
            break Termination::Converged;
        }
    };

    Ok(FlowTrajectory {
        params: *params,
        settings: *settings,
        samples,
        termination,
        max_rhs_leakage,
        max_vertex_leakage,
        rhs_evaluations: evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(u: f64, j: f64, jp: f64) -> ModelParams {
        ModelParams::new(2.0, 1.0, 0.5, u, j, jp, 0.05).unwrap()
    }

    #[test]
    fn initial_vertex_examples() {
        let v = initial_vertex(&params(2.0, 0.0, 0.0));
        assert_eq!(v.classes(), [0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        let v = initial_vertex(&params(2.0, -1.0, -0.5));
        assert_eq!(v.class(VertexClass::Ssxx), -0.5);
        assert_eq!(v.class(VertexClass::Sxsx), 2.0);
        assert_eq!(v.class(VertexClass::Xssx), 3.0);
        assert_eq!(initial_vertex(&params(0.0, 0.0, 0.0)), VertexTensor::zeros());
    }

    #[test]
    fn zero_vertex_has_zero_rhs() {
        let p = params(0.0, 0.0, 0.0);
        let d = flow_rhs(&VertexTensor::zeros(), 1.0, &p, &KGrid::default(), FlowMode::Full).unwrap();
        assert_eq!(d, VertexTensor::zeros());
    }

    #[test]
    fn settings_validation() {
        let p = params(1.0, 0.0, 0.0);
        let s = FlowSettings::for_params(&p);
        assert!(s.validate(&p).is_ok());
        assert!(s.with_k_points(32).validate(&p).is_err());
        let mut bad = s;
        bad.divergence_threshold = p.bandwidth();
        assert!(bad.validate(&p).is_err());
        bad = s;
        bad.lambda0 = p.bandwidth();
        assert!(bad.validate(&p).is_err());
    }

    #[test]
    fn free_flow_converges_to_zero() {
        let p = params(0.0, 0.0, 0.0);
        let t = integrate_flow(&p, &FlowSettings::for_params(&p)).unwrap();
        assert_eq!(t.termination, Termination::Converged);
        assert_eq!(*t.final_vertex(), VertexTensor::zeros());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn contraction_preserves_classes(vals in proptest::array::uniform8(-3.0f64..3.0),
                                         pp in proptest::array::uniform3(-1.0f64..1.0),
                                         ph in proptest::array::uniform3(-1.0f64..1.0)) {
            // Bubbles only depend on the s/p character of the two lines.
            let table = |t: [f64; 3]| {
                let mut out = [[0.0; 3]; 3];
                for n in 0..3 { for m in 0..3 {
                    out[n][m] = match (n == 0, m == 0) { (true, true) => t[0], (false, false) => t[2], _ => t[1] };
                }}
                out
            };
            let v = VertexTensor::from_classes(vals);
            let raw = contract(&v, &table(pp), &table(ph));
            prop_assert!(raw.leakage() <= 1e-12 * raw.max_abs().max(1.0));
        }
    }
}
