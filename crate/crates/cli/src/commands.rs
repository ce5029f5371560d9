//! Subcommand implementations. Each reads its keys from the resolved
//! [`Config`], runs the library, and writes `<command>.csv` plus a JSON summary.

use std::f64::consts::PI;
use std::path::PathBuf;

use intertwined::channels::symmetry_table;
use intertwined::coulomb::{estimate_couplings, zeta_sweep, InteractionEstimate, MonteCarloConfig, WannierParams};
use intertwined::mean_field::{
    gl_coefficients, order_amplitude, quasiparticle_band, small_gap_amplitude, soi_band_edge, zeeman_selection,
    OrderParameter, ZeemanState,
};
use intertwined::susceptibility::{chi_rpa, temperature_sweep, Chi0Source, SweepSettings};
use intertwined::{integrate_flow, ChannelCombination, FlowMode, FlowSettings, KGrid, ModelParams, Termination, VertexClass};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::CliError;
use crate::output::{num, opt_num, Csv, Run};

const MODEL_KEYS: &[&str] = &["unit", "t_s", "t_p", "delta", "u", "j", "jp"];
const FLOW_KEYS: &[&str] = &["k_points", "l_max", "ode_tolerance", "lambda0", "divergence_threshold", "mode"];
const GRID_KEYS: &[&str] = &["temperatures", "t_min", "t_max", "t_points", "deltas"];

fn keys(groups: &[&[&'static str]], extra: &[&'static str]) -> Vec<&'static str> {
    let mut out: Vec<&'static str> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    out.extend_from_slice(extra);
    out.push("out_dir");
    out
}

fn out_dir(cfg: &mut Config) -> PathBuf {
    PathBuf::from(cfg.string("out_dir", "."))
}

/// Model parameters in the declared energy unit.
///
/// `unit = ts` fixes t_s = 1 and `unit = tp` fixes t_p = 1; every energy is
/// then a multiple of that hopping. `unit = eV` takes all values as given.
pub fn model_params(cfg: &mut Config, with_temperature: bool) -> Result<ModelParams, CliError> {
    let unit = cfg.string("unit", "tp");
    let (ts_default, tp_default) = match unit.as_str() {
        "ts" => (1.0, 0.5),
        "tp" | "eV" => (2.0, 1.0),
        other => {
            return Err(CliError::Usage(format!("`unit` must be one of ts, tp, eV (got `{other}`)")));
        }
    };
    let t_s = cfg.f64("t_s", ts_default)?;
    let t_p = cfg.f64("t_p", tp_default)?;
    if unit == "ts" && t_s != 1.0 {
        return Err(CliError::Usage(format!("conflicting units: unit = ts requires t_s = 1, got t_s = {t_s}")));
    }
    if unit == "tp" && t_p != 1.0 {
        return Err(CliError::Usage(format!("conflicting units: unit = tp requires t_p = 1, got t_p = {t_p}")));
    }
    let delta = cfg.f64("delta", 0.05)?;
    let u = cfg.f64("u", 2.0)?;
    let j = cfg.f64("j", 0.0)?;
    let jp = cfg.f64("jp", 0.0)?;
    let temperature = if with_temperature { cfg.f64("temperature", 0.01)? } else { 0.0 };
    Ok(ModelParams::new(t_s, t_p, delta, u, j, jp, temperature)?)
}

fn flow_mode(cfg: &mut Config) -> Result<FlowMode, CliError> {
    match cfg.string("mode", "full").as_str() {
        "full" => Ok(FlowMode::Full),
        "divergent_only" => Ok(FlowMode::DivergentOnly),
        other => Err(CliError::Usage(format!("`mode` must be full or divergent_only (got `{other}`)"))),
    }
}

fn flow_settings(cfg: &mut Config, params: &ModelParams) -> Result<FlowSettings, CliError> {
    let mut s = FlowSettings::for_params(params);
    s.k_points = cfg.usize("k_points", s.k_points)?;
    s.l_max = cfg.f64("l_max", s.l_max)?;
    s.ode_tolerance = cfg.f64("ode_tolerance", s.ode_tolerance)?;
    if let Some(v) = cfg.opt_f64("lambda0")? {
        s.lambda0 = v;
    }
    if let Some(v) = cfg.opt_f64("divergence_threshold")? {
        s.divergence_threshold = v;
    }
    s.mode = flow_mode(cfg)?;
    s.validate(params)?;
    Ok(s)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn temperature_grid(cfg: &mut Config) -> Result<Vec<f64>, CliError> {
    if cfg.contains("temperatures") {
        return cfg.f64_list("temperatures", "");
    }
    let lo = cfg.f64("t_min", 1e-3)?;
    let hi = cfg.f64("t_max", 1.0)?;
    let n = cfg.usize("t_points", 25)?;
    if !(lo > 0.0 && hi >= lo && n >= 1) {
        return Err(CliError::Usage(format!(
            "temperature grid needs 0 < t_min <= t_max and t_points >= 1 (got {lo}, {hi}, {n})"
        )));
    }
    Ok(log_grid(lo, hi, n))
}

const CLASS_HEADER: &str = "v_ssss,v_xxxx,v_ssxx,v_sxsx,v_xssx,v_xxyy,v_xyxy,v_yxxy";

pub fn flow(mut cfg: Config) -> Result<i32, CliError> {
    cfg.check_keys(&keys(&[MODEL_KEYS, FLOW_KEYS], &["temperature"]))?;
    let params = model_params(&mut cfg, true)?;
    let settings = flow_settings(&mut cfg, &params)?;
    let mut run = Run::new("flow", out_dir(&mut cfg));
    let traj = integrate_flow(&params, &settings)?;

    let mut csv = Csv::new(&cfg.digest(), &format!("l,lambda,{CLASS_HEADER}"));
    for s in &traj.samples {
        let mut fields = vec![num(s.l), num(s.lambda)];
        fields.extend(s.vertex.classes().iter().map(|v| num(*v)));
        csv.row(fields);
    }
    run.write_csv(csv)?;
    let final_classes: serde_json::Map<String, Value> = VertexClass::ALL
        .iter()
        .map(|c| (c.name().to_string(), json!(traj.final_vertex().class(*c))))
        .collect();
    let termination = match traj.termination {
        Termination::Converged => "converged",
        Termination::Diverged { .. } => "diverged",
        Termination::MaxLReached => "max_l_reached",
    };
    let result = json!({
        "termination": termination,
        "diverged_component": match traj.termination {
            Termination::Diverged { component, .. } => Value::from(component.name()),
            _ => Value::Null,
        },
        "l_div": traj.l_div(),
        "final_l": traj.final_sample().l,
        "final_components": final_classes,
        "settings": settings,
        "accepted_steps": traj.samples.len() - 1,
        "rhs_evaluations": traj.rhs_evaluations,
        "max_rhs_leakage": traj.max_rhs_leakage,
    });
    run.finish(&cfg, "ok", result)?;
    Ok(0)
}

pub fn sweep_chi(mut cfg: Config) -> Result<i32, CliError> {
    cfg.check_keys(&keys(&[MODEL_KEYS, FLOW_KEYS, GRID_KEYS], &["channels"]))?;
    let params = model_params(&mut cfg, false)?;
    let temps = temperature_grid(&mut cfg)?;
    let deltas = cfg.f64_list("deltas", "0.05,0.1,0.2,0.4")?;
    let channels: Vec<ChannelCombination> = cfg
        .str_list("channels", "so;so_trs_odd;singlet_trs_odd")
        .iter()
        .map(|n| ChannelCombination::from_name(n))
        .collect::<Result<_, _>>()?;
    let defaults = SweepSettings::default();
    let settings = SweepSettings {
        k_points: cfg.usize("k_points", defaults.k_points)?,
        l_max: cfg.f64("l_max", defaults.l_max)?,
        ode_tolerance: cfg.f64("ode_tolerance", defaults.ode_tolerance)?,
        mode: flow_mode(&mut cfg)?,
    };
    for key in ["lambda0", "divergence_threshold"] {
        if cfg.contains(key) {
            return Err(CliError::Usage(format!(
                "`{key}` follows each point's bandwidth in sweeps; use the flow subcommand to set it"
            )));
        }
    }
    for &d in &deltas {
        settings.flow_settings(&params.with_delta(d)).validate(&params.with_delta(d))?;
    }
    let mut run = Run::new("sweep-chi", out_dir(&mut cfg));
    let result = temperature_sweep(&params, &temps, &deltas, &channels, &settings)?;

    let mut csv = Csv::new(&cfg.digest(), "temperature,delta,channel,chi,diverged,l_div");
    let mut failures = Vec::new();
    for r in &result.rows {
        csv.row([num(r.temperature), num(r.delta), r.channel.clone(), opt_num(r.chi), r.diverged.to_string(), opt_num(r.l_div)]);
        if let Some(e) = &r.error {
            failures.push(json!({"temperature": r.temperature, "delta": r.delta, "channel": r.channel, "error": e}));
        }
    }
    run.write_csv(csv)?;
    let status = if failures.is_empty() { "ok" } else { "partial" };
    let summary = json!({
        "channels": channels.iter().map(|c| json!({"name": c.name, "operator": c.formula()})).collect::<Vec<_>>(),
        "points": temps.len() * deltas.len(),
        "max_rhs_leakage": result.max_rhs_leakage,
        "failures": failures,
    });
    run.finish(&cfg, status, summary)?;
    Ok(if failures.is_empty() { 0 } else { 2 })
}

pub fn rpa(mut cfg: Config) -> Result<i32, CliError> {
    cfg.check_keys(&keys(&[MODEL_KEYS, GRID_KEYS], &["k_points", "source", "lambda"]))?;
    let params = model_params(&mut cfg, false)?;
    let temps = temperature_grid(&mut cfg)?;
    let deltas = cfg.f64_list("deltas", "0.05,0.1,0.2,0.4")?;
    let source = match cfg.string("source", "lattice").as_str() {
        "lattice" => Chi0Source::Lattice,
        "continuum" => Chi0Source::Continuum,
        other => return Err(CliError::Usage(format!("`source` must be lattice or continuum (got `{other}`)"))),
    };
    let k_points = cfg.usize("k_points", 512)?;
    let lambda_key = cfg.string("lambda", "lambda0");
    let mut run = Run::new("rpa", out_dir(&mut cfg));

    let mut csv = Csv::new(&cfg.digest(), "temperature,delta,channel,chi,diverged,l_div");
    for &delta in &deltas {
        for &t in &temps {
            let p = params.with_delta(delta).with_temperature(t);
            let lambda = match lambda_key.as_str() {
                "lambda0" => FlowSettings::for_params(&p).lambda0,
                other => other
                    .parse::<f64>()
                    .ok()
                    .or((other == "inf").then_some(f64::INFINITY))
                    .ok_or_else(|| CliError::Usage(format!("`lambda` must be lambda0, inf or a number (got `{other}`)")))?,
            };
            let v = chi_rpa(&p, source, lambda, &KGrid::with_points(k_points))?;
            csv.row([num(t), num(delta), "so_rpa".to_string(), opt_num(v.chi), v.chi.is_none().to_string(), num(f64::NAN)]);
        }
    }
    run.write_csv(csv)?;
    run.finish(&cfg, "ok", json!({"coupling": params.u - params.j, "points": temps.len() * deltas.len()}))?;
    Ok(0)
}

fn phi_fields(phi: &OrderParameter) -> Vec<String> {
    phi.phi.iter().flat_map(|z| [num(z.re), num(z.im)]).collect()
}

pub fn order(mut cfg: Config) -> Result<i32, CliError> {
    cfg.check_keys(&keys(&[MODEL_KEYS], &["k_points", "zeeman"]))?;
    let params = model_params(&mut cfg, false)?;
    let k_points = cfg.usize("k_points", 512)?;
    let zeeman = cfg.f64("zeeman", 0.0)?;
    let mut run = Run::new("order", out_dir(&mut cfg));
    let coeffs = gl_coefficients(&params, &KGrid::with_points(k_points))?;
    let amplitude = order_amplitude(&coeffs)?;
    let small_gap = small_gap_amplitude(&params);
    let state = zeeman_selection(&coeffs, zeeman)?;
    let (label, phi, shift) = match state {
        ZeemanState::Selected { order, energy_shift } => ("selected", Some(order), energy_shift),
        ZeemanState::Degenerate { .. } => ("degenerate", None, 0.0),
    };
    let mut csv = Csv::new(
        &cfg.digest(),
        "r,c0,c2,chi_tilde,zeeman_integral,amplitude,small_gap_amplitude,zeeman,state,\
         phi_p1_re,phi_p1_im,phi_0_re,phi_0_im,phi_m1_re,phi_m1_im",
    );
    let mut fields = vec![
        num(coeffs.r),
        num(coeffs.c0),
        num(coeffs.c2),
        num(coeffs.chi_tilde),
        num(coeffs.zeeman_integral),
        num(amplitude),
        num(small_gap),
        num(zeeman),
        label.to_string(),
    ];
    match &phi {
        Some(p) => fields.extend(phi_fields(p)),
        None => fields.extend(std::iter::repeat_n(num(f64::NAN), 6)),
    }
    csv.row(fields);
    run.write_csv(csv)?;
    let result = json!({
        "coefficients": coeffs,
        "ordered": coeffs.r > 0.0,
        "amplitude": amplitude,
        "small_gap_amplitude": small_gap,
        "state": label,
        "order_parameter": phi.map(|p| p.phi.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()),
        "zeeman_energy_shift": shift,
    });
    run.finish(&cfg, "ok", result)?;
    Ok(0)
}

pub fn soi(mut cfg: Config) -> Result<i32, CliError> {
    cfg.check_keys(&keys(&[MODEL_KEYS], &["k_points", "phi", "phi_source", "nk"]))?;
    let params = model_params(&mut cfg, false)?;
    let source = if cfg.contains("phi") { "value".to_string() } else { cfg.string("phi_source", "quadrature") };
    let phi_amp = match source.as_str() {
        "value" => {
            if cfg.contains("phi_source") && cfg.opt_string("phi_source").as_deref() != Some("value") {
                return Err(CliError::Usage("give either `phi` or `phi_source`, not both".into()));
            }
            cfg.opt_f64("phi")?.expect("checked above")
        }
        "quadrature" => {
            let k_points = cfg.usize("k_points", 512)?;
            order_amplitude(&gl_coefficients(&params, &KGrid::with_points(k_points))?)?
        }
        "small_gap" => small_gap_amplitude(&params),
        other => {
            return Err(CliError::Usage(format!(
                "`phi_source` must be quadrature or small_gap, or pass `phi` directly (got `{other}`)"
            )))
        }
    };
    let nk = cfg.usize("nk", 201)?;
    if nk < 2 {
        return Err(CliError::Usage("`nk` must be at least 2".into()));
    }
    let mut run = Run::new("soi", out_dir(&mut cfg));
    let order = OrderParameter::polarized_up(Complex64::new(phi_amp, 0.0));
    let mut csv = Csv::new(&cfg.digest(), "k,lambda_so,e1,e2,e3,e4,e5,e6");
    for i in 0..nk {
        let k = -PI + 2.0 * PI * i as f64 / (nk - 1) as f64;
        let band = quasiparticle_band(k, &params, &order);
        let mut fields = vec![num(k), num(band.lambda_so)];
        fields.extend(band.energies.iter().map(|e| num(*e)));
        csv.row(fields);
    }
    run.write_csv(csv)?;
    let result = json!({
        "phi": phi_amp,
        "phi_source": source,
        "band_edge_lambda_so": soi_band_edge(&params, phi_amp),
        "coupling": params.coupling(),
    });
    run.finish(&cfg, "ok", result)?;
    Ok(0)
}

fn estimate_fields(zeta: f64, e: &InteractionEstimate) -> Vec<String> {
    vec![
        num(zeta),
        num(e.u.value),
        num(e.u.std_error),
        num(e.j.value),
        num(e.j.std_error),
        num(e.jp.value),
        num(e.jp.std_error),
    ]
}

pub fn coulomb(mut cfg: Config) -> Result<i32, CliError> {
    cfg.check_keys(&keys(
        &[],
        &["e0", "zetas", "e2", "a_perp", "a_par", "samples", "seed", "streams", "rel_error_bound"],
    ))?;
    let seed = cfg
        .opt_u64("seed")?
        .ok_or_else(|| CliError::Usage("missing seed: pass --seed <integer> or set `seed` in the config".into()))?;
    let defaults = MonteCarloConfig::default();
    let samples = cfg.usize("samples", defaults.n_samples as usize)? as u64;
    let streams = cfg.usize("streams", defaults.n_streams as usize)?;
    let mc = MonteCarloConfig {
        n_samples: samples,
        seed,
        n_streams: u32::try_from(streams).map_err(|_| CliError::Usage("`streams` is too large".into()))?,
        rel_error_bound: cfg.f64("rel_error_bound", defaults.rel_error_bound)?,
    };
    let direct = ["e2", "a_perp", "a_par"].map(|k| cfg.contains(k));
    let mut csv_rows = Vec::new();
    let mut failures = Vec::new();
    let unit;
    if direct.iter().any(|&d| d) {
        if !direct.iter().all(|&d| d) {
            return Err(CliError::Usage("direct geometry needs all of e2, a_perp and a_par".into()));
        }
        if cfg.contains("e0") || cfg.contains("zetas") {
            return Err(CliError::Usage("give either e0/zetas or e2/a_perp/a_par, not both".into()));
        }
        let params = WannierParams::new(cfg.f64("a_perp", 1.0)?, cfg.f64("a_par", 1.0)?, cfg.f64("e2", 1.0)?)?;
        let e = estimate_couplings(&params, &mc)?;
        csv_rows.push(estimate_fields(params.zeta(), &e));
        unit = "energy units of e2 / length";
    } else {
        let e0 = cfg.f64("e0", 1.0)?;
        let zetas = cfg.f64_list("zetas", "0.5,0.75,1,1.25,1.5,1.75,2")?;
        for row in zeta_sweep(e0, &zetas, &mc)? {
            match (&row.estimate, &row.error) {
                (Some(e), _) => csv_rows.push(estimate_fields(row.zeta, e)),
                (None, err) => {
                    let mut fields = vec![num(row.zeta)];
                    fields.extend(std::iter::repeat_n(num(f64::NAN), 6));
                    csv_rows.push(fields);
                    failures.push(json!({"zeta": row.zeta, "error": err}));
                }
            }
        }
        unit = "multiples of E0";
    }
    let mut run = Run::new("coulomb", out_dir(&mut cfg));
    let mut csv = Csv::new(&cfg.digest(), "zeta,u,u_err,j,j_err,jp,jp_err");
    for r in csv_rows {
        csv.row(r);
    }
    run.write_csv(csv)?;
    let status = if failures.is_empty() { "ok" } else { "partial" };
    run.finish(&cfg, status, json!({"unit": unit, "monte_carlo": mc, "failures": failures}))?;
    Ok(if failures.is_empty() { 0 } else { 2 })
}

pub fn channels_table(mut cfg: Config) -> Result<i32, CliError> {
    cfg.check_keys(&keys(&[], &["m_s"]))?;
    let m_values: Vec<i8> = match cfg.opt_string("m_s") {
        None => vec![1, 0, -1],
        Some(raw) => {
            let m: i8 = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("`m_s` must be -1, 0 or 1 (got `{raw}`)")))?;
            if !(-1..=1).contains(&m) {
                return Err(CliError::Usage(format!("`m_s` must be -1, 0 or 1 (got {m})")));
            }
            vec![m]
        }
    };
    let mut run = Run::new("channels-table", out_dir(&mut cfg));
    let mut csv = Csv::new(&cfg.digest(), "m_s,heading,operator,su2,parity,trs");
    let mut text = String::new();
    let mut rows = Vec::new();
    for &m in &m_values {
        for r in symmetry_table(m) {
            let s = r.signature;
            rows.push((m, r.heading.clone(), r.combination.formula(), s.su2.to_string(), s.parity.to_string(), s.trs.to_string()));
        }
    }
    let width = rows.iter().map(|r| r.2.len()).max().unwrap_or(8).max(8);
    text.push_str(&format!("{:>4}  {:<9} {:<width$}  {:<8} {:<6} {}\n", "m_s", "j,m,ml", "operator", "SU(2)", "parity", "TRS"));
    for (m, heading, op, su2, parity, trs) in &rows {
        text.push_str(&format!("{m:>4}  {heading:<9} {op:<width$}  {su2:<8} {parity:<6} {trs}\n"));
        csv.row([m.to_string(), format!("\"{heading}\""), format!("\"{op}\""), su2.clone(), parity.clone(), trs.clone()]);
    }
    print!("{text}");
    run.write(".txt", &format!("# config_digest={}\n{text}", cfg.digest()))?;
    run.write_csv(csv)?;
    run.finish(&cfg, "ok", json!({"rows": rows.len()}))?;
    Ok(0)
}
