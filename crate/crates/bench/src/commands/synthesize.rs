use std::path::{Path, PathBuf};

use bilinear_core::synth::DesignOptions;
use bilinear_core::PulseShape;
use serde::Serialize;

use super::load_system;
use crate::config::{ControlSpec, LadderSpec, Provenance, PulseSpec};
use crate::error::{CliError, Status};
use crate::files::{create_dir, write_json, ControlFile, SCHEMA_VERSION};

#[derive(Debug, Clone)]
pub struct SynthesizeArgs {
    pub system: Option<String>,
    pub system_file: Option<PathBuf>,
    pub transition: Option<(usize, usize)>,
    pub ladder: Option<usize>,
    pub amplitude: f64,
    pub shape: PulseShape,
    pub design: DesignOptions,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct DesignFile<'a> {
    schema_version: u32,
    design: &'a Provenance,
}

#[derive(Serialize)]
struct Summary {
    segments: usize,
    horizon: f64,
    l1_norm: f64,
    /// Per leg for a ladder.
    steps_per_period: Vec<usize>,
    repetitions: Vec<usize>,
    predicted_population: Vec<f64>,
    warnings: usize,
}

/// Writes `design.json` and `control.json` into `out` and prints a summary.
pub fn synthesize(args: &SynthesizeArgs) -> Result<Status, CliError> {
    let sys = load_system(args.system.as_deref(), args.system_file.as_ref())?;
    let spec = match (args.transition, args.ladder) {
        (Some(transition), None) => ControlSpec::Pulse(PulseSpec {
            transition,
            amplitude: args.amplitude,
            shape: args.shape.clone(),
            design: args.design.clone(),
        }),
        (None, Some(top_level)) => ControlSpec::Ladder(LadderSpec {
            top_level,
            amplitude: args.amplitude,
            shape: args.shape.clone(),
            design: args.design.clone(),
        }),
        _ => {
            return Err(CliError::config(
                "give exactly one of --transition and --ladder",
            ))
        }
    };
    let (control, provenance) = spec.resolve(&sys, Path::new("."))?;
    let legs = match &provenance {
        Provenance::Pulse(d) => vec![d],
        Provenance::Ladder(l) => l.legs.iter().collect(),
        _ => unreachable!("synthesized controls are designs"),
    };
    let summary = Summary {
        segments: control.len(),
        horizon: control.horizon(),
        l1_norm: control.l1_norm(),
        steps_per_period: legs.iter().map(|d| d.steps_per_period).collect(),
        repetitions: legs.iter().map(|d| d.pulse.repetitions()).collect(),
        predicted_population: legs.iter().map(|d| d.predicted_population).collect(),
        warnings: legs.iter().map(|d| d.warnings.len()).sum(),
    };

    create_dir(&args.out)?;
    write_json(
        &args.out.join("design.json"),
        &DesignFile {
            schema_version: SCHEMA_VERSION,
            design: &provenance,
        },
    )?;
    write_json(&args.out.join("control.json"), &ControlFile::new(control))?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(Status::Pass)
}
