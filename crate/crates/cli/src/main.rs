//! `fvps`: batch driver for the phase-space toolkit.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input, 3 a `--check`
//! comparison missed its tolerance.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "fvps", version, about = "Relativistic phase-space experiments")]
struct Cli {
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for sweeps and grid transforms.
    #[arg(long, global = true, env = "FVPS_JOBS")]
    jobs: Option<usize>,

    #[command(flatten)]
    units: UnitArgs,

    #[command(subcommand)]
    command: Command,
}

/// Physical constants; natural units by default.
#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct UnitArgs {
    #[arg(long, global = true, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long = "c", global = true, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub hbar: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print ε, χ and the purity right-hand side for a momentum pair.
    Factors(FactorsArgs),
    /// Even Wigner component of a Gaussian packet, with moments.
    Wigner(WignerArgs),
    /// Propagate an even Wigner component with the spectral Moyal propagator.
    Evolve(EvolveArgs),
    /// Free or rotator coherent state.
    Coherent(CoherentArgs),
    /// Orbit radius of a charged rotator coherent state.
    Rotator(RotatorArgs),
    /// Fermi overlap penalty and pair energies.
    Entangle(EntangleArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct FactorsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub p1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// λ = 8 on a 512 x 512 grid.
    Fig1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Eps {
    Rel,
    Unity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// `q,p,W` rows.
    Long,
    /// Contour-ready matrix.
    Matrix,
}

/// Gaussian packet and grid flags shared by `wigner` and `evolve`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct PacketArgs {
    /// Localization λ = λ_c/σ.
    #[arg(long, conflicts_with = "sigma")]
    pub lambda: Option<f64>,
    /// Position width σ.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub p_bar: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub q_bar: f64,
    /// Momentum nodes (multiple of 4); chosen from the packet when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p_max: Option<f64>,
    /// Position half-window; must match the conjugate value πħn/(2 p_max).
    #[arg(long)]
    pub q_max: Option<f64>,
    #[arg(long, value_enum, default_value_t = Eps::Rel)]
    pub epsilon: Eps,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct WignerArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[command(flatten)]
    pub packet: PacketArgs,
    #[arg(long, value_enum, default_value_t = Layout::Long)]
    pub layout: Layout,
    /// Field CSV; the JSON report goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub packet: PacketArgs,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Compare with the Wigner transform of the evolved wavefunction.
    #[arg(long)]
    pub check: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Also run the explicit time-step reference with this many steps.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum, default_value_t = Layout::Long)]
    pub layout: Layout,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherentKind {
    Free,
    Rotator,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct CoherentArgs {
    #[arg(long, value_enum, default_value_t = CoherentKind::Free)]
    pub kind: CoherentKind,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha_im: f64,
    /// Width of the free state; one Compton length when omitted.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p_max: Option<f64>,
    /// Field strength b of the rotator.
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 64)]
    pub n_max: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumArg {
    Rel,
    Equal,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct RotatorArgs {
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha_im: f64,
    #[arg(long, default_value_t = 64)]
    pub n_max: usize,
    #[arg(long, default_value_t = 2000.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = SpectrumArg::Rel)]
    pub spectrum: SpectrumArg,
    /// Also report ‖[A_even, Z_even]‖ on a p_z grid with this many nodes.
    #[arg(long)]
    pub coupling_nodes: Option<usize>,
    /// Raw dump of the Feshbach–Villars Hamiltonian in the level basis.
    #[arg(long)]
    pub dump_hamiltonian: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EntangleArgs {
    /// Comma-separated packet widths.
    #[arg(long, default_value = "1")]
    pub sigma: String,
    /// Comma-separated subset of `nonrel,rel`.
    #[arg(long, default_value = "nonrel,rel")]
    pub models: String,
    /// Comma-separated centre separations for pair energies (first σ).
    #[arg(long)]
    pub separation: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Factors(a) => commands::factors(a, &cli.units),
        Command::Wigner(a) => commands::wigner(a, &cli.units),
        Command::Evolve(a) => commands::evolve(a, &cli.units),
        Command::Coherent(a) => commands::coherent(a, &cli.units),
        Command::Rotator(a) => commands::rotator(a, &cli.units),
        Command::Entangle(a) => commands::entangle(a, &cli.units),
    };
    match result {
        Ok(commands::Outcome::Done) => ExitCode::SUCCESS,
        Ok(commands::Outcome::ToleranceMissed(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
