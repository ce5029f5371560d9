//! Python bindings: model parameters, flows, susceptibilities, mean-field
//! quantities and Coulomb estimates.

use ::intertwined as core;
use core::channels::symmetry_table as core_symmetry_table;
use core::coulomb::{estimate_couplings, MCEstimate};
use core::mean_field::{gl_coefficients as core_gl, order_amplitude, quasiparticle_band as core_band};
use core::susceptibility::{chi_rpa as core_chi_rpa, temperature_sweep, Chi0Source, SweepSettings};
use core::{ChannelCombination, FlowMode, FlowSettings, KGrid, ModelParams, MonteCarloConfig, OrderParameter, WannierParams};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: core::Error) -> PyErr {
    if e.is_domain() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn flow_mode(mode: &str) -> PyResult<FlowMode> {
    match mode {
        "full" => Ok(FlowMode::Full),
        "divergent_only" => Ok(FlowMode::DivergentOnly),
        other => Err(PyValueError::new_err(format!("mode must be 'full' or 'divergent_only', got '{other}'"))),
    }
}

/// Chain parameters. All energies share one unit.
#[pyclass(frozen, skip_from_py_object, module = "intertwined")]
#[derive(Clone, Copy)]
struct Model {
    inner: ModelParams,
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (t_s=2.0, t_p=1.0, delta=0.05, u=2.0, j=0.0, jp=0.0, temperature=0.01))]
    fn new(t_s: f64, t_p: f64, delta: f64, u: f64, j: f64, jp: f64, temperature: f64) -> PyResult<Self> {
        let inner = ModelParams::new(t_s, t_p, delta, u, j, jp, temperature).map_err(to_py)?;
        Ok(Model { inner })
    }

    #[getter]
    fn t_s(&self) -> f64 {
        self.inner.t_s
    }
    #[getter]
    fn t_p(&self) -> f64 {
        self.inner.t_p
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }
    #[getter]
    fn u(&self) -> f64 {
        self.inner.u
    }
    #[getter]
    fn j(&self) -> f64 {
        self.inner.j
    }
    #[getter]
    fn jp(&self) -> f64 {
        self.inner.jp
    }
    #[getter]
    fn temperature(&self) -> f64 {
        self.inner.temperature
    }

    /// Spin-orbit coupling g = U - J.
    #[getter]
    fn coupling(&self) -> f64 {
        self.inner.coupling()
    }

    fn with_temperature(&self, temperature: f64) -> PyResult<Self> {
        let inner = self.inner.with_temperature(temperature);
        inner.validate().map_err(to_py)?;
        Ok(Model { inner })
    }

    fn with_delta(&self, delta: f64) -> PyResult<Self> {
        let inner = self.inner.with_delta(delta);
        inner.validate().map_err(to_py)?;
        Ok(Model { inner })
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "Model(t_s={}, t_p={}, delta={}, u={}, j={}, jp={}, temperature={})",
            p.t_s, p.t_p, p.delta, p.u, p.j, p.jp, p.temperature
        )
    }
}

/// Integrates the vertex flow. Returns a dict with the scale grid, the eight
/// vertex classes along the flow and the termination status.
#[pyfunction]
#[pyo3(signature = (model, k_points=512, mode="full", l_max=30.0, ode_tolerance=1e-6))]
fn flow<'py>(
    py: Python<'py>,
    model: &Model,
    k_points: usize,
    mode: &str,
    l_max: f64,
    ode_tolerance: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut settings = FlowSettings::for_params(&model.inner).with_k_points(k_points).with_mode(flow_mode(mode)?);
    settings.l_max = l_max;
    settings.ode_tolerance = ode_tolerance;
    let traj = py.detach(|| core::integrate_flow(&model.inner, &settings)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("l", traj.samples.iter().map(|s| s.l).collect::<Vec<_>>())?;
    out.set_item("lambda", traj.samples.iter().map(|s| s.lambda).collect::<Vec<_>>())?;
    let classes = PyDict::new(py);
    for class in core::VertexClass::ALL {
        classes.set_item(class.name(), traj.samples.iter().map(|s| s.vertex.class(class)).collect::<Vec<_>>())?;
    }
    out.set_item("classes", classes)?;
    out.set_item("diverged", traj.diverged())?;
    out.set_item("l_div", traj.l_div())?;
    out.set_item("max_rhs_leakage", traj.max_rhs_leakage)?;
    Ok(out)
}

/// Channel susceptibilities on a (delta, T) grid. Returns one dict per row;
/// divergent channels have `chi = None`.
#[pyfunction]
#[pyo3(signature = (model, temperatures, deltas, channels=vec!["so".to_string()], k_points=512, mode="full"))]
fn sweep_chi<'py>(
    py: Python<'py>,
    model: &Model,
    temperatures: Vec<f64>,
    deltas: Vec<f64>,
    channels: Vec<String>,
    k_points: usize,
    mode: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let combos: Vec<ChannelCombination> =
        channels.iter().map(|c| ChannelCombination::from_name(c)).collect::<Result<_, _>>().map_err(to_py)?;
    let settings = SweepSettings { k_points, mode: flow_mode(mode)?, ..SweepSettings::default() };
    let result = py
        .detach(|| temperature_sweep(&model.inner, &temperatures, &deltas, &combos, &settings))
        .map_err(to_py)?;
    result
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("temperature", r.temperature)?;
            d.set_item("delta", r.delta)?;
            d.set_item("channel", &r.channel)?;
            d.set_item("chi", r.chi)?;
            d.set_item("diverged", r.diverged)?;
            d.set_item("l_div", r.l_div)?;
            d.set_item("error", &r.error)?;
            Ok(d)
        })
        .collect()
}

/// RPA susceptibility of the spin-orbit channel. Returns `(chi0, chi)` with
/// `chi = None` beyond the pole.
#[pyfunction]
#[pyo3(signature = (model, source="lattice", cutoff=f64::INFINITY, k_points=512))]
fn chi_rpa(model: &Model, source: &str, cutoff: f64, k_points: usize) -> PyResult<(f64, Option<f64>)> {
    let source = match source {
        "lattice" => Chi0Source::Lattice,
        "continuum" => Chi0Source::Continuum,
        other => return Err(PyValueError::new_err(format!("source must be 'lattice' or 'continuum', got '{other}'"))),
    };
    let v = core_chi_rpa(&model.inner, source, cutoff, &KGrid::with_points(k_points)).map_err(to_py)?;
    Ok((v.chi0, v.chi))
}

/// Ginzburg-Landau coefficients and the equilibrium amplitude |Phi|.
#[pyfunction]
#[pyo3(signature = (model, k_points=512))]
fn gl_coefficients<'py>(py: Python<'py>, model: &Model, k_points: usize) -> PyResult<Bound<'py, PyDict>> {
    let c = core_gl(&model.inner, &KGrid::with_points(k_points)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("r", c.r)?;
    out.set_item("c0", c.c0)?;
    out.set_item("c2", c.c2)?;
    out.set_item("chi_tilde", c.chi_tilde)?;
    out.set_item("zeeman_integral", c.zeeman_integral)?;
    out.set_item("amplitude", order_amplitude(&c).map_err(to_py)?)?;
    Ok(out)
}

/// Induced spin-orbit strength at the band edge for amplitude `phi`.
#[pyfunction]
fn soi_band_edge(model: &Model, phi: f64) -> f64 {
    core::mean_field::soi_band_edge(&model.inner, phi)
}

/// Sorted quasiparticle energies and lambda_SO at momentum k in the m_s = +1 state.
#[pyfunction]
fn quasiparticle_band(model: &Model, k: f64, phi: f64) -> (Vec<f64>, f64) {
    let order = OrderParameter::polarized_up(Complex64::new(phi, 0.0));
    let band = core_band(k, &model.inner, &order);
    (band.energies.to_vec(), band.lambda_so)
}

/// Symmetry classification of the twelve pairing operators.
#[pyfunction]
#[pyo3(signature = (m_s=1))]
fn symmetry_table<'py>(py: Python<'py>, m_s: i8) -> PyResult<Vec<Bound<'py, PyDict>>> {
    if !(-1..=1).contains(&m_s) {
        return Err(PyValueError::new_err(format!("m_s must be -1, 0 or 1, got {m_s}")));
    }
    core_symmetry_table(m_s)
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("heading", &r.heading)?;
            d.set_item("operator", r.combination.formula())?;
            d.set_item("su2", r.signature.su2.to_string())?;
            d.set_item("parity", r.signature.parity.to_string())?;
            d.set_item("trs", r.signature.trs.to_string())?;
            Ok(d)
        })
        .collect()
}

fn estimate_pair(e: &MCEstimate) -> (f64, f64) {
    (e.value, e.std_error)
}

/// Monte Carlo U, J, J' (each as `(value, std_error)`) for anisotropy `zeta`,
/// in multiples of `e0`.
#[pyfunction]
#[pyo3(signature = (zeta, seed, e0=1.0, samples=10_000_000))]
fn coulomb_couplings<'py>(py: Python<'py>, zeta: f64, seed: u64, e0: f64, samples: u64) -> PyResult<Bound<'py, PyDict>> {
    let params = WannierParams::from_e0_zeta(e0, zeta).map_err(to_py)?;
    let mc = MonteCarloConfig { n_samples: samples, seed, ..MonteCarloConfig::default() };
    let e = py.detach(|| estimate_couplings(&params, &mc)).map_err(to_py)?;
    let out = PyDict::new(py);
    let scale = 1.0 / e0;
    for (name, est) in [("u", &e.u), ("j", &e.j), ("jp", &e.jp)] {
        let (v, s) = estimate_pair(est);
        out.set_item(name, (v * scale, s * scale))?;
    }
    Ok(out)
}

#[pymodule]
#[pyo3(name = "intertwined")]
fn intertwined_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", core::VERSION)?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(flow, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_chi, m)?)?;
    m.add_function(wrap_pyfunction!(chi_rpa, m)?)?;
    m.add_function(wrap_pyfunction!(gl_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(soi_band_edge, m)?)?;
    m.add_function(wrap_pyfunction!(quasiparticle_band, m)?)?;
    m.add_function(wrap_pyfunction!(symmetry_table, m)?)?;
    m.add_function(wrap_pyfunction!(coulomb_couplings, m)?)?;
    Ok(())
}
