//! Argument structs for every subcommand.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "entpot",
    version,
    about = "Experiments on the colored entanglement-potential model",
    propagate_version = true
)]
pub struct Cli {
    /// Output root; every run writes <out>/<command>-<timestamp>/
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Master seed; generated and recorded in the manifest when omitted
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: TopCommand,
}

#[derive(Subcommand, Debug)]
pub enum TopCommand {
    /// Inspect the exact coupling tables
    Coupling {
        #[command(subcommand)]
        action: CouplingCommand,
    },
    /// Per-bipartition purities and total H of a state
    Energy(EnergyArgs),
    /// Exact, cactus, and Monte Carlo cumulants of H at beta = 0
    Cumulants(CumulantsArgs),
    /// One fixed-beta Metropolis chain
    Sample(SampleArgs),
    /// Grid of independent fixed-beta chains, fresh random start per point
    Sweep(SweepArgs),
    /// Single annealed chain over the beta grid
    Anneal(AnnealArgs),
    /// Heat/cool loop probing for hysteresis
    Hysteresis(HysteresisArgs),
    /// Replica overlap versus beta
    Overlap(OverlapArgs),
    /// Ground-state search (anneal plus projected-gradient polish)
    Minimize(MinimizeArgs),
    /// Rescaled ground-state energy versus the number of colors
    ScanFrustration(ScanFrustrationArgs),
    /// Large-Nc Dyson fixed point for the diagonal propagator
    Dyson(DysonArgs),
    /// Re-run a recorded manifest
    Replay(ReplayArgs),
}

#[derive(Subcommand, Debug)]
pub enum CouplingCommand {
    /// Emit the ghat table and the diagonal coupling row as CSV
    Dump(CouplingDumpArgs),
}

#[derive(Args, Debug)]
pub struct CouplingDumpArgs {
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct EnergyArgs {
    /// State file (.json or .csv); omit to draw a random state
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub nc: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CumulantsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub nc: usize,
    /// Highest cumulant order
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    /// Exact Wick enumeration column
    #[arg(long)]
    pub exact: bool,
    /// Analytic cactus column
    #[arg(long)]
    pub cactus: bool,
    /// Monte Carlo column
    #[arg(long)]
    pub mc: bool,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub nc: usize,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub beta_tilde: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub theta_max: f64,
    /// Freeze theta_max instead of adapting it during burn-in
    #[arg(long)]
    pub no_adapt: bool,
    /// Sweeps between measurements
    #[arg(long, default_value_t = 1)]
    pub measure_every: usize,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: usize,
    /// Comma-separated list of color counts
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub nc: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub fine_step: f64,
    #[arg(long, default_value_t = 3.0)]
    pub fine_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub coarse_step: f64,
    #[arg(long, default_value_t = 10.0)]
    pub coarse_max: f64,
    /// Sweeps per grid point (half burn-in, half measurement)
    #[arg(long, default_value_t = 400)]
    pub sweeps: usize,
}

#[derive(Args, Debug)]
pub struct AnnealArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub nc: usize,
    #[arg(long, default_value_t = 0.1)]
    pub fine_step: f64,
    #[arg(long, default_value_t = 3.0)]
    pub fine_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub coarse_step: f64,
    #[arg(long, default_value_t = 10.0)]
    pub coarse_max: f64,
    #[arg(long, default_value_t = 500)]
    pub sweeps_per_leg: usize,
    /// Anneal from large beta down to zero instead of up
    #[arg(long)]
    pub down: bool,
}

#[derive(Args, Debug)]
pub struct HysteresisArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub nc: usize,
    #[arg(long, default_value_t = 130.0)]
    pub beta_max: f64,
    #[arg(long, default_value_t = 4.0)]
    pub delta_beta: f64,
    #[arg(long, default_value_t = 300)]
    pub steps_per_beta: usize,
}

#[derive(Args, Debug)]
pub struct OverlapArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub nc: usize,
    #[arg(long, default_value_t = 0.25)]
    pub fine_step: f64,
    #[arg(long, default_value_t = 3.0)]
    pub fine_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub coarse_step: f64,
    #[arg(long, default_value_t = 3.0)]
    pub coarse_max: f64,
    /// Configurations per beta point
    #[arg(long, default_value_t = 50)]
    pub measurements: usize,
    /// Sweeps between successive configurations
    #[arg(long, default_value_t = 10)]
    pub cadence: usize,
    /// Equilibration sweeps per beta point; defaults to ten times the
    /// measurement window
    #[arg(long)]
    pub burn_in: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MinimizeArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub nc: usize,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 120)]
    pub sweeps_per_leg: usize,
}

#[derive(Args, Debug)]
pub struct ScanFrustrationArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub nc_min: usize,
    #[arg(long, default_value_t = 8)]
    pub nc_max: usize,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
}

#[derive(Args, Debug)]
pub struct DysonArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub beta_tilde: f64,
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// manifest.json of a previous run
    #[arg(long)]
    pub manifest: PathBuf,
}

/// A resolved non-replay command, ready to execute.
pub enum CommandKind {
    Coupling(CouplingDumpArgs),
    Energy(EnergyArgs),
    Cumulants(CumulantsArgs),
    Sample(SampleArgs),
    Sweep(SweepArgs),
    Anneal(AnnealArgs),
    Hysteresis(HysteresisArgs),
    Overlap(OverlapArgs),
    Minimize(MinimizeArgs),
    ScanFrustration(ScanFrustrationArgs),
    Dyson(DysonArgs),
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Coupling(_) => "coupling",
            CommandKind::Energy(_) => "energy",
            CommandKind::Cumulants(_) => "cumulants",
            CommandKind::Sample(_) => "sample",
            CommandKind::Sweep(_) => "sweep",
            CommandKind::Anneal(_) => "anneal",
            CommandKind::Hysteresis(_) => "hysteresis",
            CommandKind::Overlap(_) => "overlap",
            CommandKind::Minimize(_) => "minimize",
            CommandKind::ScanFrustration(_) => "scan-frustration",
            CommandKind::Dyson(_) => "dyson",
        }
    }
}
