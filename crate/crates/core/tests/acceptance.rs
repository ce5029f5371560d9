//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so every line reaches the
//! output. The process fails if a criterion fails that is not listed in
//! [`KNOWN_FAILURES`].

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use intertwined::channels::{symmetry_table, Parity, Su2Class, TrsClass};
use intertwined::coulomb::{coulomb_matrix_element, zeta_sweep, MonteCarloConfig, Orbital};
use intertwined::mean_field::{
    free_energy, gl_coefficients, numerical_spectrum, order_amplitude, quasiparticle_band,
    quasiparticle_transform, small_gap_amplitude, soi_band_edge, zeeman_selection,
    mean_field_hamiltonian, OrderParameter, ZeemanState,
};
use intertwined::susceptibility::{
    chi_rpa, chi_spin_orbit, divergence_temperature, temperature_sweep, Chi0Source, SweepResult,
    SweepRow, SweepSettings,
};
use intertwined::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail for documented reasons (see the project notes).
const KNOWN_FAILURES: &[u8] = &[11];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn free_chi(p: &ModelParams, k_points: usize) -> f64 {
    let fs = FlowSettings::for_params(p).with_k_points(k_points);
    chi_rpa(p, Chi0Source::Lattice, fs.lambda0, &fs.grid()).unwrap().chi0
}

fn bubble_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for delta in [0.01, 0.05, 0.2, 1.0, 3.0] {
        for (t_s, t_p) in [(2.0, 1.0), (1.0, 0.5), (1.0, 1.0), (0.5, 1.5)] {
            let p = ModelParams::new(t_s, t_p, delta, 0.0, 0.0, 0.0, 0.0).unwrap();
            let value = -bubble(BubbleKind::ParticleHole, Band::S, Band::Px, f64::INFINITY, &p).unwrap();
            let exact = 1.0 / (delta * (delta + 4.0 * (t_s + t_p))).sqrt();
            worst = worst.max((value / exact - 1.0).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-6 && elapsed < Duration::from_secs(1),
        format!("20 triples, max rel error {worst:.2e}, {elapsed:.2?}"),
    )
}

fn divergence_scaling() -> Outcome {
    let deltas = log_grid(1e-4, 1e-2, 9);
    let (xs, ys): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .map(|&d| {
            let p = ModelParams::new(2.0, 1.0, d, 0.0, 0.0, 0.0, 0.0).unwrap();
            let chi0 = -bubble(BubbleKind::ParticleHole, Band::S, Band::Px, f64::INFINITY, &p).unwrap();
            (d.ln(), chi0.ln())
        })
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    outcome((slope + 0.5).abs() <= 0.005, format!("fitted exponent {slope:.5}"))
}

fn rpa_agreement() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for (delta, t) in [(0.05, 0.01), (0.2, 0.02), (0.4, 0.05)] {
        let start = Instant::now();
        let p0 = ModelParams::new(2.0, 1.0, delta, 0.0, 0.0, 0.0, t).unwrap();
        let p = p0.with_couplings(0.3 / free_chi(&p0, 256), 0.0, 0.0);
        let fs = FlowSettings::for_params(&p).with_k_points(256);
        let frg = chi_spin_orbit(&p, &fs).unwrap().chi;
        let rpa = chi_rpa(&p, Chi0Source::Lattice, fs.lambda0, &fs.grid()).unwrap().chi;
        match (frg, rpa) {
            (Some(a), Some(b)) => worst = worst.max((a / b - 1.0).abs()),
            _ => worst = f64::INFINITY,
        }
        slowest = slowest.max(start.elapsed());
    }
    outcome(
        worst < 0.05 && slowest < Duration::from_secs(60),
        format!("g chi0 = 0.3, max |fRG/RPA - 1| = {worst:.2e}, slowest point {slowest:.2?}"),
    )
}

struct CouplingSuite {
    grid: Vec<f64>,
    sweeps: Vec<(&'static str, ModelParams, SweepResult, Duration)>,
}

const SO: &str = "so";
const SO_ODD: &str = "so_trs_odd";
const SINGLET: &str = "singlet_trs_odd";

fn channels() -> Vec<ChannelCombination> {
    vec![
        ChannelCombination::spin_orbit(1),
        ChannelCombination::spin_orbit_trs_odd(1),
        ChannelCombination::singlet_trs_odd(),
    ]
}

fn row<'a>(sweep: &'a SweepResult, channel: &str, t: f64) -> &'a SweepRow {
    sweep
        .rows
        .iter()
        .find(|r| r.channel == channel && r.temperature == t)
        .expect("row present")
}

fn suppressed(r: &SweepRow, p: &ModelParams) -> bool {
    !r.diverged && r.chi.is_some_and(|chi| chi < free_chi(&p.with_temperature(r.temperature), 256))
}

fn run_coupling_suite() -> CouplingSuite {
    let grid = log_grid(1e-3, 1.0, 13);
    let settings = SweepSettings { k_points: 256, ..Default::default() };
    let cases = [
        ("a", (2.0, 0.0, 0.0)),
        ("b", (2.0, -1.0, -0.5)),
        ("c", (2.0, 0.1, -0.5)),
        ("d", (2.0, -1.0, 0.5)),
    ];
    let sweeps = cases
        .iter()
        .map(|&(name, (u, j, jp))| {
            let p = ModelParams::new(2.0, 1.0, 0.05, u, j, jp, 0.0).unwrap();
            let start = Instant::now();
            let sweep = temperature_sweep(&p, &grid, &[0.05], &channels(), &settings).unwrap();
            (name, p, sweep, start.elapsed())
        })
        .collect();
    CouplingSuite { grid, sweeps }
}

/// Highest grid temperature at which the channel is flagged divergent,
/// refined by bisection towards the next grid point.
fn highest_divergence(suite: &CouplingSuite, case: usize) -> Option<f64> {
    let (_, p, sweep, _) = &suite.sweeps[case];
    let idx = suite.grid.iter().rposition(|&t| row(sweep, SO, t).diverged)?;
    let Some(&upper) = suite.grid.get(idx + 1) else {
        return Some(suite.grid[idx]);
    };
    let settings = SweepSettings { k_points: 256, ..Default::default() };
    divergence_temperature(p, &settings, Some(&ChannelCombination::spin_orbit(1)), suite.grid[idx], upper, 1e-3)
        .unwrap()
}

fn coupling_suite(suite: &CouplingSuite) -> Outcome {
    let diverges = |case: usize, channel: &str| {
        let sweep = &suite.sweeps[case].2;
        suite.grid.iter().any(|&t| row(sweep, channel, t).diverged)
    };
    let a = diverges(0, SO);
    let (ta, tb) = (highest_divergence(suite, 0), highest_divergence(suite, 1));
    let b = matches!((ta, tb), (Some(ta), Some(tb)) if tb > ta);
    let c = diverges(2, SO);
    let (_, pd, sd, _) = &suite.sweeps[3];
    let low_t: Vec<f64> = suite.grid.iter().copied().filter(|&t| t <= 0.01).collect();
    let d_suppressed = low_t.iter().all(|&t| suppressed(row(sd, SO, t), pd));
    let d_odd = diverges(3, SO_ODD);
    let d = d_suppressed && d_odd;
    let slowest = suite.sweeps.iter().map(|s| s.3).max().unwrap();
    let fmt = |t: Option<f64>| t.map_or("none".to_string(), |t| format!("{t:.4}"));
    outcome(
        a && b && c && d && slowest < Duration::from_secs(600),
        format!(
            "(a) so diverges: {a}; (b) T_div {} > {}: {b}; (c) so diverges: {c}; \
             (d) so suppressed for T <= 0.01: {d_suppressed}, trs-odd diverges: {d_odd}; slowest sweep {slowest:.2?}",
            fmt(tb),
            fmt(ta)
        ),
    )
}

fn competing_singlet() -> Outcome {
    let grid = log_grid(1e-3, 1.0, 13);
    let settings = SweepSettings { k_points: 256, ..Default::default() };
    let p = ModelParams::new(1.0, 0.5, 0.025, 2.0, 1.0, -0.5, 0.0).unwrap();
    let sweep = temperature_sweep(&p, &grid, &[p.delta], &channels(), &settings).unwrap();
    let hits: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&t| row(&sweep, SINGLET, t).diverged && suppressed(row(&sweep, SO, t), &p))
        .collect();
    outcome(
        !hits.is_empty(),
        format!("singlet divergent with so suppressed at T = {hits:.3?}"),
    )
}

fn table_one() -> Outcome {
    use Parity::{Even as PE, Odd as PO};
    use Su2Class::{Singlet as S, Triplet as T};
    use TrsClass::{Even as TE, Odd as TO};
    let expected = [
        (S, PE, TE),
        (S, PE, TE),
        (S, PE, TO),
        (S, PO, TE),
        (S, PO, TO),
        (S, PE, TE),
        (T, PE, TO),
        (T, PE, TO),
        (T, PE, TE),
        (T, PO, TO),
        (T, PO, TE),
        (T, PE, TO),
    ];
    let mut mismatches = Vec::new();
    for m_s in [-1i8, 0, 1] {
        for (i, (row, exp)) in symmetry_table(m_s).iter().zip(expected).enumerate() {
            let s = row.signature;
            if (s.su2, s.parity, s.trs) != exp {
                mismatches.push(format!("m_s={m_s} row {}: {}", i + 1, row.combination.name));
            }
        }
    }
    outcome(mismatches.is_empty(), format!("12 rows x 3 m_s, mismatches: {mismatches:?}"))
}

fn leakage(suite: &CouplingSuite) -> Outcome {
    let worst = suite.sweeps.iter().map(|s| s.2.max_rhs_leakage).fold(0.0, f64::max);
    outcome(worst < 1e-10, format!("max relative leakage over criterion-4 flows {worst:.2e}"))
}

fn soi_numerics() -> Outcome {
    let p = ModelParams::new(1.2, 0.8, 0.0, 1.0, 0.0, 0.0, 0.0).unwrap();
    let phi = small_gap_amplitude(&p);
    let edge = soi_band_edge(&p, phi).abs();
    let exact = 0.125 / 2f64.sqrt();
    let deltas: Vec<f64> = (0..=40).map(|i| 0.05 * i as f64).collect();
    let values: Vec<f64> = deltas.iter().map(|&d| soi_band_edge(&p.with_delta(d), phi).abs()).collect();
    let monotone = values.windows(2).all(|w| w[1] < w[0]);
    outcome(
        (edge - 0.08839).abs() < 1e-5 && (edge - exact).abs() < 1e-15 && monotone,
        format!("|lambda_so| = {edge:.7} eV, strictly decreasing over 41 gaps in [0, 2]: {monotone}"),
    )
}

fn spectral_identity() -> Outcome {
    let p = ModelParams::new(2.0, 1.0, 0.1, 1.5, 0.0, 0.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut worst = 0.0f64;
    let mut worst_offdiag = 0.0f64;
    for _ in 0..64 {
        let k = rng.random_range(-PI..PI);
        let phi = Complex64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI));
        let order = OrderParameter::polarized_up(phi);
        let numeric = numerical_spectrum(k, &p, &order);
        let analytic = quasiparticle_band(k, &p, &order).energies;
        for (a, b) in numeric.iter().zip(analytic) {
            worst = worst.max((a - b).abs());
        }
        let q = quasiparticle_transform(k, &p, &order);
        let d = q * mean_field_hamiltonian(k, &p, &order) * q.adjoint();
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    worst_offdiag = worst_offdiag.max(d[(i, j)].norm());
                }
            }
        }
    }
    outcome(
        worst < 1e-10 && worst_offdiag < 1e-10,
        format!("64 k-points, max eigenvalue deviation {worst:.2e}, rotated off-diagonal {worst_offdiag:.2e}"),
    )
}

fn su3_degeneracy() -> Outcome {
    let p = ModelParams::new(1.0, 0.5, 0.05, 1.0, 0.0, 0.0, 0.0).unwrap();
    let c = gl_coefficients(&p, &KGrid::default()).unwrap();
    let amp = order_amplitude(&c).unwrap();
    let a = Complex64::new(amp, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let split = (free_energy(&OrderParameter { phi: [a, z, z] }, &c, 0.0)
        - free_energy(&OrderParameter { phi: [z, a, z] }, &c, 0.0))
    .abs();
    let selected = matches!(
        zeeman_selection(&c, 0.01).unwrap(),
        ZeemanState::Selected { order, .. } if order.phi[0] == a && order.phi[1] == z && order.phi[2] == z
    );
    outcome(
        amp > 0.0 && split < 1e-12 && selected,
        format!("|phi| = {amp:.6}, F splitting {split:.1e}, delta > 0 selects Phi_+1: {selected}"),
    )
}

fn coulomb() -> Outcome {
    let mc = MonteCarloConfig { seed: 2024, ..Default::default() };
    let mut ok = true;
    let mut parts = Vec::new();
    let mut slowest = Duration::ZERO;
    for zeta in [0.5, 1.0, 2.0] {
        let start = Instant::now();
        let rows = zeta_sweep(1.0, &[zeta], &mc).unwrap();
        slowest = slowest.max(start.elapsed());
        let Some(e) = rows[0].estimate else {
            ok = false;
            parts.push(format!("zeta={zeta}: {}", rows[0].error.clone().unwrap_or_default()));
            continue;
        };
        let (u, j, jp) = (e.u.value, e.j.value, e.jp.value);
        let good = (0.25..=0.7).contains(&u) && j < 0.0 && j.abs() < 0.05 * u && jp.abs() < 0.05 * u;
        ok &= good;
        parts.push(format!(
            "zeta={zeta}: U={u:.4} J={j:.5} J'={jp:.5} |J|/U={:.4} |J'|/U={:.4}",
            j.abs() / u,
            jp.abs() / u
        ));
    }
    let p = intertwined::coulomb::WannierParams::from_e0_zeta(1.0, 1.0).unwrap();
    let errors: Vec<f64> = (0..4)
        .map(|i| {
            let cfg = MonteCarloConfig { n_samples: 200_000 << i, seed: 7, ..Default::default() };
            coulomb_matrix_element([Orbital::X, Orbital::Z, Orbital::Z, Orbital::X], &p, &cfg)
                .unwrap()
                .std_error
        })
        .collect();
    let halving = errors.windows(2).all(|w| ((w[1] / w[0]) * 2f64.sqrt() - 1.0).abs() < 0.2);
    ok &= halving && slowest < Duration::from_secs(300);
    outcome(
        ok,
        format!("{}; error ratios sqrt(2) halving: {halving}; slowest zeta {slowest:.2?}", parts.join("; ")),
    )
}

fn main() {
    let mut failures = Vec::new();
    let mut report = |id: u8, title: &str, o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_FAILURES.contains(&id) { " (known failure)" } else { "" };
        println!("{status} criterion {id:>2} {title}: {}{note}", o.detail);
        if !o.pass && !KNOWN_FAILURES.contains(&id) {
            failures.push(id);
        }
    };
    report(1, "bubble oracle", bubble_oracle());
    report(2, "divergence scaling", divergence_scaling());
    report(3, "RPA agreement", rpa_agreement());
    let suite = run_coupling_suite();
    report(4, "coupling-dependent divergence suite", coupling_suite(&suite));
    report(5, "competing singlet channel", competing_singlet());
    report(6, "symmetry table", table_one());
    report(7, "vertex symmetry preservation", leakage(&suite));
    report(8, "SOI numerics", soi_numerics());
    report(9, "mean-field spectral identity", spectral_identity());
    report(10, "SU(3) degeneracy", su3_degeneracy());
    report(11, "Coulomb estimates", coulomb());
    if !failures.is_empty() {
        eprintln!("unexpected failures: {failures:?}");
        std::process::exit(1);
    }
}
