mod diagnose;
mod galerkin_order;
mod simulate;
mod spectrum;
mod sweep;
mod synthesize;

use std::path::PathBuf;

use bilinear_core::diagnostics::{
    DiagnosticReport, EnergyVariationCheck, L1LowerBoundCheck, NormGrowthCheck,
};
use bilinear_core::propagator::{Observer, Sample};
use bilinear_core::{BuiltinSystem, SpectralSystem};

pub use diagnose::{diagnose, DiagnoseArgs};
pub use galerkin_order::{galerkin_order, GalerkinOrderArgs};
pub use simulate::{run_experiment, simulate};
pub use spectrum::{spectrum, spectrum_table, SpectrumRow};
pub use sweep::sweep;
pub use synthesize::{synthesize, SynthesizeArgs};

use crate::config::Check;
use crate::error::{invalid, CliError};
use crate::files::SpectralDataFile;

/// A built-in system name or a spectral data file.
pub fn load_system(
    name: Option<&str>,
    file: Option<&PathBuf>,
) -> Result<SpectralSystem, CliError> {
    match (name, file) {
        (Some(_), Some(_)) => Err(CliError::config(
            "give either a system name or --system-file, not both",
        )),
        (Some(n), None) => n
            .parse::<BuiltinSystem>()
            .and_then(BuiltinSystem::build)
            .map_err(invalid("system")),
        (None, Some(f)) => SpectralDataFile::load(f),
        (None, None) => Err(CliError::config("no system given")),
    }
}

/// A configured check observing one propagation.
pub enum ActiveCheck {
    NormGrowth(NormGrowthCheck),
    L1LowerBound(L1LowerBoundCheck),
    EnergyVariation(EnergyVariationCheck),
}

impl ActiveCheck {
    pub fn new(check: &Check, sys: &SpectralSystem, order: usize) -> Result<Self, CliError> {
        Ok(match check {
            Check::NormGrowth { k, c_k, options } => {
                ActiveCheck::NormGrowth(NormGrowthCheck::new(sys, order, *k, *c_k, options)?)
            }
            Check::L1LowerBound { options } => {
                ActiveCheck::L1LowerBound(L1LowerBoundCheck::new(sys, order, options)?)
            }
            Check::EnergyVariation { options } => {
                ActiveCheck::EnergyVariation(EnergyVariationCheck::new(sys, order, options)?)
            }
        })
    }

    pub fn report(&self) -> DiagnosticReport {
        match self {
            ActiveCheck::NormGrowth(c) => c.report(),
            ActiveCheck::L1LowerBound(c) => c.report(),
            ActiveCheck::EnergyVariation(c) => c.report(),
        }
    }
}

pub struct Checks(pub Vec<ActiveCheck>);

impl Checks {
    pub fn new(checks: &[Check], sys: &SpectralSystem, order: usize) -> Result<Self, CliError> {
        checks
            .iter()
            .map(|c| ActiveCheck::new(c, sys, order))
            .collect::<Result<Vec<_>, _>>()
            .map(Checks)
    }

    pub fn reports(&self) -> Vec<DiagnosticReport> {
        self.0.iter().map(ActiveCheck::report).collect()
    }
}

impl Observer for Checks {
    fn observe(&mut self, sample: &Sample<'_>) {
        for c in &mut self.0 {
            match c {
                ActiveCheck::NormGrowth(c) => c.observe(sample),
                ActiveCheck::L1LowerBound(c) => c.observe(sample),
                ActiveCheck::EnergyVariation(c) => c.observe(sample),
            }
        }
    }
}

pub fn any_failed(reports: &[DiagnosticReport]) -> bool {
    reports.iter().any(|r| r.verdict.is_fail())
}
