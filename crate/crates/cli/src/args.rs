use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fvdsim_core::lattice::GeometryMode;
use fvdsim_core::observables::{SigmaPattern, Windowing};

use crate::config::{ComputeSection, ExperimentSection, IoSection, RunConfig, SystemSection};

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\ncore: fvdsim-core ",
    env!("CARGO_PKG_VERSION"),
    "\nnumerics: f64, Krylov propagation, Lanczos eigensolver"
);

#[derive(Debug, Parser)]
#[command(name = "fvdsim", version, long_version = LONG_VERSION, about = "False-vacuum decay in Rydberg rings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quench from |1010…⟩ and fit the Néel decay rate.
    Decay(DecayArgs),
    /// Linear ramp of the local detuning.
    Anneal(AnnealArgs),
    /// Decay rate against 1/β with the confinement fit.
    RateVsBeta(RateVsBetaArgs),
    /// Decay rate against the zero-confinement gap.
    RateVsGap(RateVsGapArgs),
    /// Decay rate over an (α, R_b/a) grid.
    RateDiagram(GridArgs),
    /// Decay quench over α × R_b/a × β.
    Sweep(SweepArgs),
    /// Ground-state TPCF-Néel over an (α, R_b/a) grid.
    PhaseDiagram(PhaseArgs),
    /// Two-atom Landau-Zener ramp.
    TwoAtom(TwoAtomArgs),
    /// Atom layout and schedule checks against hardware limits.
    Protocol(ProtocolArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Decay(_) => "decay",
            Command::Anneal(_) => "anneal",
            Command::RateVsBeta(_) => "rate-vs-beta",
            Command::RateVsGap(_) => "rate-vs-gap",
            Command::RateDiagram(_) => "rate-diagram",
            Command::Sweep(_) => "sweep",
            Command::PhaseDiagram(_) => "phase-diagram",
            Command::TwoAtom(_) => "two-atom",
            Command::Protocol(_) => "protocol",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Decay(a) => &a.common,
            Command::Anneal(a) => &a.common,
            Command::RateVsBeta(a) => &a.common,
            Command::RateVsGap(a) => &a.common,
            Command::RateDiagram(a) => &a.common,
            Command::Sweep(a) => &a.common,
            Command::PhaseDiagram(a) => &a.common,
            Command::TwoAtom(a) => &a.common,
            Command::Protocol(a) => &a.common,
        }
    }

    /// Flag and environment values as a config layer.
    pub fn overlay(&self) -> RunConfig {
        let mut cfg = self.common().overlay();
        let ex = &mut cfg.experiment;
        match self {
            Command::Decay(a) => a.decay.apply(ex),
            Command::Anneal(a) => {
                ex.tau = a.tau;
                ex.beta_start = a.beta_start;
                ex.beta_stop = a.beta_stop;
                ex.samples = a.samples;
                ex.dt = a.dt;
                ex.windowing = a.windowing;
                ex.pattern = a.pattern;
            }
            Command::RateVsBeta(a) => {
                a.decay.apply(ex);
                ex.betas = a.betas.clone();
                ex.beta_window = a.beta_window;
            }
            Command::RateVsGap(a) => {
                a.decay.apply(ex);
                ex.rb_values = a.rb_values.clone();
                ex.alphas = a.alphas.clone();
            }
            Command::RateDiagram(a) => {
                a.decay.apply(ex);
                a.grid.apply(ex);
            }
            Command::Sweep(a) => {
                a.decay.apply(ex);
                ex.alphas = a.alphas.clone();
                ex.rb_values = a.rb_values.clone();
                ex.betas = a.betas.clone();
            }
            Command::PhaseDiagram(a) => a.grid.apply(ex),
            Command::TwoAtom(a) => {
                ex.tau = a.tau;
                ex.beta_start = a.beta_start;
                ex.t_end = a.t_end;
                ex.dt = a.dt;
                ex.samples = a.samples;
            }
            Command::Protocol(a) => {
                ex.b = a.b;
                ex.n_y = a.n_y;
                ex.upgraded_fov = a.upgraded_fov.then_some(true);
                ex.step_quench = a.step_quench.then_some(true);
            }
        }
        cfg
    }
}

/// `LO,HI`.
fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 2]>::try_from(v).map_err(|v| format!("expected LO,HI, got {} values", v.len()))
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML or JSON config file.
    #[arg(long, env = "FVDSIM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "FVDSIM_OUT")]
    pub out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, env = "FVDSIM_FORCE")]
    pub force: bool,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, env = "FVDSIM_THREADS")]
    pub threads: Option<usize>,

    #[arg(long = "n-s", visible_alias = "ns", env = "FVDSIM_N_S", help_heading = "System")]
    pub n_s: Option<usize>,
    #[arg(long, env = "FVDSIM_RB_OVER_A", help_heading = "System")]
    pub rb_over_a: Option<f64>,
    /// Δ_glob/Ω.
    #[arg(long, env = "FVDSIM_ALPHA", allow_negative_numbers = true, help_heading = "System")]
    pub alpha: Option<f64>,
    /// Δ_loc/Δ_glob.
    #[arg(long, env = "FVDSIM_BETA", allow_negative_numbers = true, help_heading = "System")]
    pub beta: Option<f64>,
    /// Ω/2π in MHz.
    #[arg(long, env = "FVDSIM_OMEGA_MHZ", help_heading = "System")]
    pub omega_mhz: Option<f64>,
    #[arg(long, env = "FVDSIM_GEOMETRY_MODE", help_heading = "System")]
    pub geometry_mode: Option<GeometryMode>,
    /// C6 in rad/μs·μm⁶.
    #[arg(long, env = "FVDSIM_C6", help_heading = "System")]
    pub c6: Option<f64>,
    /// Lattice spacing in μm.
    #[arg(long, env = "FVDSIM_A", help_heading = "System")]
    pub a: Option<f64>,

    #[arg(long, env = "FVDSIM_KRYLOV_DIM", help_heading = "Compute")]
    pub krylov_dim: Option<usize>,
    #[arg(long, env = "FVDSIM_KRYLOV_TOL", help_heading = "Compute")]
    pub krylov_tol: Option<f64>,
    #[arg(long, env = "FVDSIM_MAX_SUBSTEPS", help_heading = "Compute")]
    pub max_substeps: Option<usize>,
}

impl CommonArgs {
    fn overlay(&self) -> RunConfig {
        RunConfig {
            system: SystemSection {
                n_s: self.n_s,
                rb_over_a: self.rb_over_a,
                alpha: self.alpha,
                beta: self.beta,
                omega_mhz: self.omega_mhz,
                geometry_mode: self.geometry_mode,
                c6: self.c6,
                a: self.a,
            },
            experiment: ExperimentSection::default(),
            io: IoSection {
                out: self.out.clone(),
                force: self.force.then_some(true),
            },
            compute: ComputeSection {
                threads: self.threads,
                krylov_dim: self.krylov_dim,
                krylov_tol: self.krylov_tol,
                max_substeps: self.max_substeps,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DecayFlags {
    /// Final time in units of Ωt/2π.
    #[arg(long, env = "FVDSIM_HORIZON", help_heading = "Decay")]
    pub horizon: Option<f64>,
    #[arg(long, env = "FVDSIM_SAMPLES", help_heading = "Decay")]
    pub samples: Option<usize>,
    #[arg(long, env = "FVDSIM_SG_WINDOW", help_heading = "Decay")]
    pub sg_window: Option<usize>,
    #[arg(long, env = "FVDSIM_SG_ORDER", help_heading = "Decay")]
    pub sg_order: Option<usize>,
    /// Fit-window search interval LO,HI in Ωt/2π.
    #[arg(long, value_parser = parse_pair, help_heading = "Decay")]
    pub search: Option<[f64; 2]>,
    #[arg(long, env = "FVDSIM_WINDOWING", help_heading = "Decay")]
    pub windowing: Option<Windowing>,
    #[arg(long, env = "FVDSIM_PATTERN", help_heading = "Decay")]
    pub pattern: Option<SigmaPattern>,
}

impl DecayFlags {
    fn apply(&self, ex: &mut ExperimentSection) {
        ex.horizon = self.horizon;
        ex.samples = self.samples;
        ex.sg_window = self.sg_window;
        ex.sg_order = self.sg_order;
        ex.search = self.search;
        ex.windowing = self.windowing;
        ex.pattern = self.pattern;
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridFlags {
    /// LO,HI of Δ_glob/Ω.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, help_heading = "Grid")]
    pub alpha_range: Option<[f64; 2]>,
    /// LO,HI of R_b/a.
    #[arg(long, value_parser = parse_pair, help_heading = "Grid")]
    pub rba_range: Option<[f64; 2]>,
    /// Points per axis.
    #[arg(long, env = "FVDSIM_RESOLUTION", help_heading = "Grid")]
    pub resolution: Option<usize>,
}

impl GridFlags {
    fn apply(&self, ex: &mut ExperimentSection) {
        ex.alpha_range = self.alpha_range;
        ex.rba_range = self.rba_range;
        ex.resolution = self.resolution;
    }
}

#[derive(Debug, Clone, Args)]
pub struct DecayArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub decay: DecayFlags,
}

#[derive(Debug, Clone, Args)]
pub struct AnnealArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ramp time in μs per unit of β.
    #[arg(long, env = "FVDSIM_TAU")]
    pub tau: Option<f64>,
    #[arg(long, env = "FVDSIM_BETA_START", allow_negative_numbers = true)]
    pub beta_start: Option<f64>,
    #[arg(long, env = "FVDSIM_BETA_STOP", allow_negative_numbers = true)]
    pub beta_stop: Option<f64>,
    #[arg(long, env = "FVDSIM_SAMPLES")]
    pub samples: Option<usize>,
    /// Step bound in μs.
    #[arg(long, env = "FVDSIM_DT")]
    pub dt: Option<f64>,
    #[arg(long, env = "FVDSIM_WINDOWING")]
    pub windowing: Option<Windowing>,
    #[arg(long, env = "FVDSIM_PATTERN")]
    pub pattern: Option<SigmaPattern>,
}

#[derive(Debug, Clone, Args)]
pub struct RateVsBetaArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub decay: DecayFlags,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// LO,HI of 1/β entering the fit.
    #[arg(long, value_parser = parse_pair)]
    pub beta_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Args)]
pub struct RateVsGapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub decay: DecayFlags,
    #[arg(long, value_delimiter = ',')]
    pub rb_values: Option<Vec<f64>>,
    /// Repeat the scan at each α and fit q(α).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub decay: DecayFlags,
    #[command(flatten)]
    pub grid: GridFlags,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub decay: DecayFlags,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub rb_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub betas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub grid: GridFlags,
}

#[derive(Debug, Clone, Args)]
pub struct TwoAtomArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ramp time in units of 1/Ω.
    #[arg(long, env = "FVDSIM_TAU")]
    pub tau: Option<f64>,
    #[arg(long, env = "FVDSIM_BETA_START", allow_negative_numbers = true)]
    pub beta_start: Option<f64>,
    #[arg(long, env = "FVDSIM_T_END")]
    pub t_end: Option<f64>,
    #[arg(long, env = "FVDSIM_DT")]
    pub dt: Option<f64>,
    #[arg(long, env = "FVDSIM_SAMPLES")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Main-to-ancilla distance in μm.
    #[arg(long, env = "FVDSIM_B")]
    pub b: Option<f64>,
    /// Atoms on each vertical side.
    #[arg(long, env = "FVDSIM_N_Y")]
    pub n_y: Option<usize>,
    #[arg(long, env = "FVDSIM_UPGRADED_FOV")]
    pub upgraded_fov: bool,
    /// Check the instantaneous quench instead of the smooth protocol.
    #[arg(long, env = "FVDSIM_STEP_QUENCH")]
    pub step_quench: bool,
}
