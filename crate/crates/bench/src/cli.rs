use std::path::PathBuf;

use bilinear_core::diagnostics::DEFAULT_DEGENERACY_TOL;
use bilinear_core::synth::{DesignOptions, DEFAULT_STEPS_PER_PERIOD};
use bilinear_core::{PulseShape, Waveform};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{self, load_system, DiagnoseArgs, GalerkinOrderArgs, SynthesizeArgs};
use crate::config::{CheckSpec, Tolerances, DEFAULT_AUTO_EPS};
use crate::error::{CliError, Status};

#[derive(Debug, Parser)]
#[command(name = "bilinear-bench", version, about = "Spectral-Galerkin experiments for bilinear quantum control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, gaps and the coupling band profile, as CSV.
    Spectrum {
        /// System name; same as --system.
        name: Option<String>,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment config and write trajectories and reports.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tolerances: ToleranceArgs,
    },
    /// Design a resonant pulse or ladder and write it as a control file.
    Synthesize(SynthesizeCli),
    /// Truncation order from the harmonic bound or a doubling search.
    GalerkinOrder(GalerkinOrderCli),
    /// Replay checks on a trajectory, or analyse the transition graph.
    Diagnose(DiagnoseCli),
    /// Run a parameter grid concurrently and aggregate a table.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// `square-well`, `harmonic`, `planar-rotor` or `anharmonic(alpha=3)`.
    #[arg(long)]
    pub system: Option<String>,
    /// Spectral data file instead of a built-in system.
    #[arg(long)]
    pub system_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    #[arg(long)]
    pub tol_norm_growth: Option<f64>,
    #[arg(long)]
    pub tol_l1: Option<f64>,
    #[arg(long)]
    pub tol_energy: Option<f64>,
    /// Skip checks once the top retained level holds more than this.
    #[arg(long)]
    pub guard_edge_pop: Option<f64>,
}

impl ToleranceArgs {
    fn to_tolerances(&self) -> Tolerances {
        Tolerances {
            norm_growth: self.tol_norm_growth,
            l1: self.tol_l1,
            energy: self.tol_energy,
            guard_edge_population: self.guard_edge_pop,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WaveformArg {
    Cosine,
    Square,
}

#[derive(Debug, Args)]
pub struct SynthesizeCli {
    #[command(flatten)]
    system: SystemArgs,
    /// Transition `j,k`.
    #[arg(long, value_parser = parse_pair)]
    transition: Option<(usize, usize)>,
    /// Ladder `1 → … → TOP` instead of one transition.
    #[arg(long)]
    ladder: Option<usize>,
    #[arg(long)]
    amplitude: f64,
    #[arg(long, value_enum, default_value = "cosine")]
    waveform: WaveformArg,
    /// Tabulated waveform samples `s_0,s_1,…` over one period.
    #[arg(long, value_delimiter = ',', conflicts_with = "waveform")]
    samples: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    phase: f64,
    /// Starting steps per period.
    #[arg(long, default_value_t = DEFAULT_STEPS_PER_PERIOD)]
    steps: usize,
    /// Keep the starting resolution even if rendering aliases collide.
    #[arg(long)]
    no_alias_avoidance: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GalerkinOrderCli {
    /// Closed-form bound; only `harmonic`.
    #[arg(long)]
    formula: Option<String>,
    /// System for the empirical doubling search.
    #[arg(long)]
    empirical: Option<String>,
    #[arg(long)]
    system_file: Option<PathBuf>,
    /// L1 budget of the control.
    #[arg(short = 'K', long = "budget")]
    budget: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_AUTO_EPS)]
    eps: f64,
    #[arg(long)]
    control: Option<PathBuf>,
    #[arg(long)]
    cap: Option<usize>,
    /// Initial basis level for the empirical search.
    #[arg(long = "initial", default_value_t = 1)]
    initial_level: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
pub enum CheckArg {
    NormGrowth,
    L1LowerBound,
    EnergyVariation,
}

#[derive(Debug, Args)]
pub struct DiagnoseCli {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long = "check", value_enum)]
    checks: Vec<CheckArg>,
    /// Exponents for norm-growth; repeatable.
    #[arg(short = 'k', long = "k")]
    k: Vec<f64>,
    /// Coupling constant for norm-growth when the system has no known bound.
    #[arg(long)]
    c_k: Option<f64>,
    /// Order of the transition-graph analysis.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DEGENERACY_TOL)]
    degeneracy_tol: f64,
    #[command(flatten)]
    tolerances: ToleranceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected j,k, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn system_name(positional: Option<String>, args: &SystemArgs) -> Result<Option<String>, CliError> {
    match (positional, &args.system) {
        (Some(_), Some(_)) => Err(CliError::config(
            "system given twice; use either the argument or --system",
        )),
        (p, s) => Ok(p.or_else(|| s.clone())),
    }
}

pub fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Spectrum {
            name,
            system,
            n,
            out,
        } => {
            let name = system_name(name, &system)?;
            let sys = load_system(name.as_deref(), system.system_file.as_ref())?;
            commands::spectrum(&sys, n, out.as_deref())
        }
        Command::Simulate {
            config,
            out,
            tolerances,
        } => commands::simulate(&config, out.as_deref(), &tolerances.to_tolerances()),
        Command::Synthesize(a) => {
            let waveform = match (&a.samples, a.waveform) {
                (Some(samples), _) => Waveform::Tabulated {
                    samples: samples.clone(),
                },
                (None, WaveformArg::Cosine) => Waveform::Cosine,
                (None, WaveformArg::Square) => Waveform::Square,
            };
            commands::synthesize(&SynthesizeArgs {
                system: a.system.system,
                system_file: a.system.system_file,
                transition: a.transition,
                ladder: a.ladder,
                amplitude: a.amplitude,
                shape: PulseShape {
                    waveform,
                    phase: a.phase,
                },
                design: DesignOptions {
                    steps_per_period: a.steps,
                    avoid_aliasing: !a.no_alias_avoidance,
                    ..DesignOptions::default()
                },
                out: a.out,
            })
        }
        Command::GalerkinOrder(a) => commands::galerkin_order(&GalerkinOrderArgs {
            formula: a.formula,
            empirical: a.empirical,
            system_file: a.system_file,
            budget: a.budget,
            eps: a.eps,
            control: a.control,
            cap: a.cap,
            initial_level: a.initial_level,
            out: a.out,
        }),
        Command::Diagnose(a) => {
            let ks = if a.k.is_empty() { vec![1.0] } else { a.k.clone() };
            if a.c_k.is_some() && ks.len() > 1 {
                return Err(CliError::config("--c-k applies to a single --k"));
            }
            let mut checks = Vec::new();
            for c in &a.checks {
                match c {
                    CheckArg::NormGrowth => checks.extend(
                        ks.iter().map(|&k| CheckSpec::NormGrowth { k, c_k: a.c_k }),
                    ),
                    CheckArg::L1LowerBound => checks.push(CheckSpec::L1LowerBound),
                    CheckArg::EnergyVariation => checks.push(CheckSpec::EnergyVariation),
                }
            }
            commands::diagnose(&DiagnoseArgs {
                system: a.system.system,
                system_file: a.system.system_file,
                trajectory: a.trajectory,
                checks,
                order: a.n,
                degeneracy_tol: a.degeneracy_tol,
                tolerances: a.tolerances.to_tolerances(),
                out: a.out,
            })
        }
        Command::Sweep { config, out, jobs } => commands::sweep(&config, out.as_deref(), jobs),
    }
}
