//! Experiment configuration: parsing and full validation ahead of any
//! propagation.

use std::path::{Path, PathBuf};

use bilinear_core::diagnostics::CheckOptions;
use bilinear_core::propagator::{Scheme, UNIT_NORM_TOL};
use bilinear_core::synth::{
    design_transfer, ladder_schedule, DesignOptions, LadderSchedule, TransferDesign,
};
use bilinear_core::{
    BuiltinSystem, PiecewiseConstantControl, PulseShape, SpectralSystem, StateSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliError};
use crate::files::{check_version, read_json, resolve, ControlFile, SpectralDataFile};

/// Default target for `"auto"` truncation orders.
pub const DEFAULT_AUTO_EPS: f64 = 1e-6;
/// Default cap for `"auto"` truncation orders on systems that allow one
/// implicitly.
pub const DEFAULT_AUTO_CAP: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// `square-well`, `harmonic`, `planar-rotor` or `anharmonic(alpha=3)`.
    Builtin(String),
    /// A [`SpectralDataFile`].
    File(PathBuf),
}

impl SystemSpec {
    pub fn load(&self, base: &Path) -> Result<SpectralSystem, CliError> {
        match self {
            SystemSpec::Builtin(name) => name
                .parse::<BuiltinSystem>()
                .and_then(BuiltinSystem::build)
                .map_err(invalid("system")),
            SystemSpec::File(path) => SpectralDataFile::load(&resolve(base, path)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoOrder {
    #[serde(default = "default_auto_eps")]
    pub eps: f64,
    #[serde(default)]
    pub cap: Option<usize>,
}

fn default_auto_eps() -> f64 {
    DEFAULT_AUTO_EPS
}

/// `12`, `"auto"`, or `{"auto": {"eps": 1e-6, "cap": 64}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderSpec {
    Fixed(usize),
    Keyword(String),
    Auto { auto: AutoOrder },
}

/// Validated truncation order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Fixed(usize),
    Auto { eps: f64, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub transition: (usize, usize),
    pub amplitude: f64,
    #[serde(default = "PulseShape::cosine")]
    pub shape: PulseShape,
    #[serde(default)]
    pub design: DesignOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub top_level: usize,
    pub amplitude: f64,
    #[serde(default = "PulseShape::cosine")]
    pub shape: PulseShape,
    #[serde(default)]
    pub design: DesignOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSpec {
    /// Explicit piecewise-constant table.
    Table(PiecewiseConstantControl),
    /// A [`ControlFile`].
    File(PathBuf),
    /// Resonant π-pulse for one transition.
    Pulse(PulseSpec),
    /// π-pulses `1 → 2 → … → top_level`.
    Ladder(LadderSpec),
    /// `u ≡ 0` for the given horizon.
    Zero { horizon: f64 },
}

/// A control ready to run, with the design it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Table,
    File(PathBuf),
    Pulse(TransferDesign),
    Ladder(LadderSchedule),
    Zero,
}

impl ControlSpec {
    pub fn resolve(
        &self,
        sys: &SpectralSystem,
        base: &Path,
    ) -> Result<(PiecewiseConstantControl, Provenance), CliError> {
        let (control, provenance) = match self {
            ControlSpec::Table(c) => (c.clone(), Provenance::Table),
            ControlSpec::File(path) => {
                let path = resolve(base, path);
                (ControlFile::load(&path)?, Provenance::File(path))
            }
            ControlSpec::Pulse(p) => {
                let design = design_transfer(sys, p.transition, p.amplitude, &p.shape, &p.design)
                    .map_err(invalid("pulse design"))?;
                (design.control.clone(), Provenance::Pulse(design))
            }
            ControlSpec::Ladder(l) => {
                let ladder = ladder_schedule(sys, l.top_level, l.amplitude, &l.shape, &l.design)
                    .map_err(invalid("ladder design"))?;
                (ladder.control.clone(), Provenance::Ladder(ladder))
            }
            ControlSpec::Zero { horizon } => (
                PiecewiseConstantControl::constant(0.0, *horizon).map_err(invalid("zero control"))?,
                Provenance::Zero,
            ),
        };
        control
            .check_within(sys.control_set())
            .map_err(invalid("control"))?;
        Ok((control, provenance))
    }

    /// Highest level the control design refers to.
    fn levels_used(&self) -> usize {
        match self {
            ControlSpec::Pulse(p) => p.transition.0.max(p.transition.1),
            ControlSpec::Ladder(l) => l.top_level,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckSpec {
    /// `c_k` defaults to the system's known bound.
    NormGrowth {
        k: f64,
        #[serde(default)]
        c_k: Option<f64>,
    },
    L1LowerBound,
    EnergyVariation,
}

/// A check with every parameter filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    NormGrowth { k: f64, c_k: f64, options: CheckOptions },
    L1LowerBound { options: CheckOptions },
    EnergyVariation { options: CheckOptions },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub norm_growth: Option<f64>,
    pub l1: Option<f64>,
    pub energy: Option<f64>,
    pub guard_edge_population: Option<f64>,
}

impl Tolerances {
    /// Fields set in `other` win.
    pub fn overridden_by(&self, other: &Tolerances) -> Tolerances {
        Tolerances {
            norm_growth: other.norm_growth.or(self.norm_growth),
            l1: other.l1.or(self.l1),
            energy: other.energy.or(self.energy),
            guard_edge_population: other.guard_edge_population.or(self.guard_edge_population),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("norm_growth", self.norm_growth),
            ("l1", self.l1),
            ("energy", self.energy),
            ("guard_edge_population", self.guard_edge_population),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(CliError::config(format!(
                        "tolerance {name} must be finite and non-negative, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn options(&self, tolerance: Option<f64>) -> CheckOptions {
        let mut options = CheckOptions {
            tolerance,
            ..CheckOptions::default()
        };
        if let Some(g) = self.guard_edge_population {
            options.guard_edge_population = g;
        }
        options
    }
}

pub fn resolve_checks(
    specs: &[CheckSpec],
    sys: &SpectralSystem,
    tolerances: &Tolerances,
) -> Result<Vec<Check>, CliError> {
    tolerances.validate()?;
    specs
        .iter()
        .map(|spec| match *spec {
            CheckSpec::NormGrowth { k, c_k } => {
                if !(k >= 0.0 && k.is_finite()) {
                    return Err(CliError::config(format!("norm-growth k must be >= 0, got {k}")));
                }
                let c_k = c_k.or_else(|| sys.known_coupling_bound(k)).ok_or_else(|| {
                    CliError::config(format!(
                        "norm-growth: no known coupling bound c_k for {}; give c_k explicitly",
                        sys.name()
                    ))
                })?;
                if !(c_k >= 0.0 && c_k.is_finite()) {
                    return Err(CliError::config(format!("norm-growth c_k must be >= 0, got {c_k}")));
                }
                Ok(Check::NormGrowth {
                    k,
                    c_k,
                    options: tolerances.options(tolerances.norm_growth),
                })
            }
            CheckSpec::L1LowerBound => Ok(Check::L1LowerBound {
                options: tolerances.options(tolerances.l1),
            }),
            CheckSpec::EnergyVariation => {
                if sys.coupling_opnorm().is_none() {
                    return Err(CliError::config(format!(
                        "energy-variation needs a bounded coupling operator; {} declares no norm",
                        sys.name()
                    )));
                }
                Ok(Check::EnergyVariation {
                    options: tolerances.options(tolerances.energy),
                })
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub system: SystemSpec,
    pub order: OrderSpec,
    pub control: ControlSpec,
    pub initial_state: StateSpec,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    /// Interior sampling step; breakpoints are always sampled.
    #[serde(default)]
    pub sample_dt: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub system: SpectralSystem,
    pub order: Order,
    pub control: PiecewiseConstantControl,
    pub provenance: Provenance,
    pub initial_state: StateSpec,
    pub checks: Vec<Check>,
    pub sample_dt: f64,
    pub output_dir: PathBuf,
}

pub fn resolve_order(
    spec: &OrderSpec,
    sys: &SpectralSystem,
    needed: usize,
) -> Result<Order, CliError> {
    let levels = sys.levels().unwrap_or(usize::MAX);
    let auto = |eps: f64, cap: Option<usize>| -> Result<Order, CliError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(CliError::config(format!("auto order: eps must be positive, got {eps}")));
        }
        let cap = match cap {
            Some(c) => c,
            None if sys.anharmonic_alpha().is_some() => {
                return Err(CliError::config(
                    "auto order on the anharmonic system requires an explicit cap: \
                     its Galerkin approximations are not expected to converge",
                ))
            }
            None => DEFAULT_AUTO_CAP.min(levels),
        };
        if cap < needed.max(1) || cap > levels {
            return Err(CliError::config(format!(
                "auto order: cap {cap} must lie in {}..={}",
                needed.max(1),
                levels
            )));
        }
        Ok(Order::Auto { eps, cap })
    };
    match spec {
        OrderSpec::Fixed(n) => {
            if *n == 0 || *n > levels {
                return Err(CliError::config(format!(
                    "order {n} must lie in 1..={levels}"
                )));
            }
            if *n < needed {
                return Err(CliError::config(format!(
                    "order {n} is below level {needed} used by the experiment"
                )));
            }
            Ok(Order::Fixed(*n))
        }
        OrderSpec::Keyword(k) if k == "auto" => auto(DEFAULT_AUTO_EPS, None),
        OrderSpec::Keyword(k) => Err(CliError::config(format!(
            "order must be a positive integer or \"auto\", got {k:?}"
        ))),
        OrderSpec::Auto { auto: a } => auto(a.eps, a.cap),
    }
}

pub fn validate_state(state: &StateSpec) -> Result<(), CliError> {
    let norm = state.norm();
    if state.support() == 0 {
        return Err(CliError::config("initial state: basis index must be >= 1"));
    }
    if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
        return Err(CliError::config(format!(
            "initial state has norm {norm}, expected 1"
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(ExperimentConfig, PathBuf), CliError> {
        let config: ExperimentConfig = read_json(path)?;
        check_version(config.schema_version, path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }

    /// Validates everything and designs the control; no propagation.
    pub fn resolve(
        &self,
        base: &Path,
        out: Option<&Path>,
        overrides: &Tolerances,
    ) -> Result<Experiment, CliError> {
        let system = self.system.load(base)?;
        validate_state(&self.initial_state)?;
        let needed = self.initial_state.support().max(self.control.levels_used());
        let order = resolve_order(&self.order, &system, needed)?;
        let sample_dt = match self.sample_dt {
            Some(dt) if dt > 0.0 && dt.is_finite() => dt,
            Some(dt) => {
                return Err(CliError::config(format!(
                    "sample_dt must be positive, got {dt}"
                )))
            }
            None => f64::INFINITY,
        };
        let tolerances = self.tolerances.overridden_by(overrides);
        let checks = resolve_checks(&self.checks, &system, &tolerances)?;
        let output_dir = match (out, &self.output_dir) {
            (Some(o), _) => o.to_path_buf(),
            (None, Some(d)) => resolve(base, d),
            (None, None) => {
                return Err(CliError::config(
                    "no output directory: set output_dir or pass --out",
                ))
            }
        };
        let (control, provenance) = self.control.resolve(&system, base)?;
        Ok(Experiment {
            system,
            order,
            control,
            provenance,
            initial_state: self.initial_state.clone(),
            checks,
            sample_dt,
            output_dir,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SweepGrid {
    /// Runs `u*/n` for `n T*`; one cell per `n`.
    AmplitudeScaling {
        transition: (usize, usize),
        base_amplitude: f64,
        n: Vec<usize>,
        order: usize,
        #[serde(default = "PulseShape::cosine")]
        shape: PulseShape,
        #[serde(default)]
        design: DesignOptions,
        /// Fail unless fidelities are nondecreasing within this slack.
        #[serde(default)]
        require_monotone: Option<f64>,
    },
    /// `N` against `2N` for each listed `N`; one cell per `N`.
    Truncation {
        control: ControlSpec,
        initial_state: StateSpec,
        orders: Vec<usize>,
        #[serde(default)]
        scheme: Scheme,
        /// Fail unless errors strictly decrease along `orders`.
        #[serde(default)]
        require_decreasing: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub system: SystemSpec,
    pub sweep: SweepGrid,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<(SweepConfig, PathBuf), CliError> {
        let config: SweepConfig = read_json(path)?;
        check_version(config.schema_version, path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }
}
