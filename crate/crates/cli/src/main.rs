//! `intertwined` command-line interface.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "intertwined", version, about = "Spin-orbit order in an (s, p_x, p_y) chain")]
struct Cli {
    /// `key = value` file or the JSON summary of an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for CSV and JSON output.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Temperature sweep of channel susceptibilities from the flow.
    SweepChi(SweepArgs),
    /// One flow trajectory of the vertex.
    Flow(FlowArgs),
    /// Closed-form RPA susceptibility of the spin-orbit channel.
    Rpa(RpaArgs),
    /// Ginzburg-Landau coefficients and the ordered state.
    Order(OrderArgs),
    /// Induced spin-orbit strength and quasiparticle bands.
    Soi(SoiArgs),
    /// Monte Carlo estimate of U, J and J' from Wannier orbitals.
    Coulomb(CoulombArgs),
    /// Symmetry classification of the pairing operators.
    ChannelsTable(TableArgs),
}

type Overrides = Vec<(&'static str, String)>;

fn push<T: ToString>(out: &mut Overrides, key: &'static str, value: &Option<T>) {
    if let Some(v) = value {
        out.push((key, v.to_string()));
    }
}

fn push_list(out: &mut Overrides, key: &'static str, value: &[String], sep: &str) {
    if !value.is_empty() {
        out.push((key, value.join(sep)));
    }
}

#[derive(Args, Default)]
struct ModelArgs {
    /// Energy unit: ts, tp or eV.
    #[arg(long)]
    unit: Option<String>,
    #[arg(long)]
    t_s: Option<f64>,
    #[arg(long)]
    t_p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    j: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    jp: Option<f64>,
}

impl ModelArgs {
    fn overrides(&self, out: &mut Overrides) {
        push(out, "unit", &self.unit);
        push(out, "t_s", &self.t_s);
        push(out, "t_p", &self.t_p);
        push(out, "delta", &self.delta);
        push(out, "u", &self.u);
        push(out, "j", &self.j);
        push(out, "jp", &self.jp);
    }
}

#[derive(Args)]
struct FlowOpts {
    #[arg(long)]
    k_points: Option<usize>,
    #[arg(long)]
    l_max: Option<f64>,
    #[arg(long)]
    ode_tolerance: Option<f64>,
    /// full or divergent_only.
    #[arg(long)]
    mode: Option<String>,
}

impl FlowOpts {
    fn overrides(&self, out: &mut Overrides) {
        push(out, "k_points", &self.k_points);
        push(out, "l_max", &self.l_max);
        push(out, "ode_tolerance", &self.ode_tolerance);
        push(out, "mode", &self.mode);
    }
}

#[derive(Args)]
struct GridOpts {
    /// Explicit temperatures, comma-separated.
    #[arg(long, value_delimiter = ',')]
    temperatures: Vec<String>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    t_points: Option<usize>,
    /// Band gaps, comma-separated.
    #[arg(long, value_delimiter = ',')]
    deltas: Vec<String>,
}

impl GridOpts {
    fn overrides(&self, out: &mut Overrides) {
        push_list(out, "temperatures", &self.temperatures, ",");
        push(out, "t_min", &self.t_min);
        push(out, "t_max", &self.t_max);
        push(out, "t_points", &self.t_points);
        push_list(out, "deltas", &self.deltas, ",");
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    flow: FlowOpts,
    #[command(flatten)]
    grid: GridOpts,
    /// Channel name; repeat for several (so, so_trs_odd, singlet_trs_odd, so_parity_even, B:j,m,ml,q).
    #[arg(long = "channel")]
    channels: Vec<String>,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    flow: FlowOpts,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    divergence_threshold: Option<f64>,
}

#[derive(Args)]
struct RpaArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridOpts,
    #[arg(long)]
    k_points: Option<usize>,
    /// lattice or continuum.
    #[arg(long)]
    source: Option<String>,
    /// Bubble cutoff: lambda0 (the flow start), inf, or a number.
    #[arg(long)]
    lambda: Option<String>,
}

#[derive(Args)]
struct OrderArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    k_points: Option<usize>,
    /// Zeeman splitting.
    #[arg(long, allow_hyphen_values = true)]
    zeeman: Option<f64>,
}

#[derive(Args)]
struct SoiArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    k_points: Option<usize>,
    /// Order-parameter amplitude |Φ|.
    #[arg(long)]
    phi: Option<f64>,
    /// quadrature or small_gap, used when --phi is absent.
    #[arg(long)]
    phi_source: Option<String>,
    /// Number of output momenta.
    #[arg(long)]
    nk: Option<usize>,
}

#[derive(Args)]
struct CoulombArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    e0: Option<f64>,
    /// Anisotropy ratios a_par / a_perp, comma-separated.
    #[arg(long, value_delimiter = ',')]
    zetas: Vec<String>,
    #[arg(long)]
    e2: Option<f64>,
    #[arg(long)]
    a_perp: Option<f64>,
    #[arg(long)]
    a_par: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    streams: Option<u32>,
    #[arg(long)]
    rel_error_bound: Option<f64>,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, allow_hyphen_values = true)]
    m_s: Option<i8>,
}

fn overrides(command: &Command) -> Overrides {
    let mut out = Overrides::new();
    match command {
        Command::SweepChi(a) => {
            a.model.overrides(&mut out);
            a.flow.overrides(&mut out);
            a.grid.overrides(&mut out);
            push_list(&mut out, "channels", &a.channels, ";");
        }
        Command::Flow(a) => {
            a.model.overrides(&mut out);
            a.flow.overrides(&mut out);
            push(&mut out, "temperature", &a.temperature);
            push(&mut out, "lambda0", &a.lambda0);
            push(&mut out, "divergence_threshold", &a.divergence_threshold);
        }
        Command::Rpa(a) => {
            a.model.overrides(&mut out);
            a.grid.overrides(&mut out);
            push(&mut out, "k_points", &a.k_points);
            push(&mut out, "source", &a.source);
            push(&mut out, "lambda", &a.lambda);
        }
        Command::Order(a) => {
            a.model.overrides(&mut out);
            push(&mut out, "k_points", &a.k_points);
            push(&mut out, "zeeman", &a.zeeman);
        }
        Command::Soi(a) => {
            a.model.overrides(&mut out);
            push(&mut out, "k_points", &a.k_points);
            push(&mut out, "phi", &a.phi);
            push(&mut out, "phi_source", &a.phi_source);
            push(&mut out, "nk", &a.nk);
        }
        Command::Coulomb(a) => {
            push(&mut out, "seed", &a.seed);
            push(&mut out, "e0", &a.e0);
            push_list(&mut out, "zetas", &a.zetas, ",");
            push(&mut out, "e2", &a.e2);
            push(&mut out, "a_perp", &a.a_perp);
            push(&mut out, "a_par", &a.a_par);
            push(&mut out, "samples", &a.samples);
            push(&mut out, "streams", &a.streams);
            push(&mut out, "rel_error_bound", &a.rel_error_bound);
        }
        Command::ChannelsTable(a) => push(&mut out, "m_s", &a.m_s),
    }
    out
}

fn run(cli: Cli) -> Result<i32, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    cfg.overlay(overrides(&cli.command));
    if let Some(dir) = &cli.out_dir {
        cfg.overlay(vec![("out_dir", dir.display().to_string())]);
    }
    match cli.command {
        Command::SweepChi(_) => commands::sweep_chi(cfg),
        Command::Flow(_) => commands::flow(cfg),
        Command::Rpa(_) => commands::rpa(cfg),
        Command::Order(_) => commands::order(cfg),
        Command::Soi(_) => commands::soi(cfg),
        Command::Coulomb(_) => commands::coulomb(cfg),
        Command::ChannelsTable(_) => commands::channels_table(cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
