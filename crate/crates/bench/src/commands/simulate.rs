use std::fs;
use std::io::BufWriter;
use std::path::Path;

use bilinear_core::diagnostics::Verdict;
use bilinear_core::galerkin::{compress, empirical_truncation_order, ConvergenceReport};
use bilinear_core::propagator::{propagate_observed, TrajectoryRecorder};
use serde::Serialize;

use super::{any_failed, Checks};
use crate::config::{Experiment, ExperimentConfig, Order, Provenance, Tolerances};
use crate::error::{CliError, Status};
use crate::files::{
    create_dir, write_json, write_lines, ControlFile, TrajectoryFile, SCHEMA_VERSION,
};

#[derive(Serialize)]
struct CheckLine<'a> {
    check: &'a str,
    verdict: &'a Verdict,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    system: &'a str,
    order: Option<usize>,
    auto_order: bool,
    converged: Option<bool>,
    horizon: f64,
    segments: usize,
    l1_norm: f64,
    samples: usize,
    terminal_populations: Vec<f64>,
    checks: Vec<CheckLine<'a>>,
    status: &'static str,
}

#[derive(Serialize)]
struct ConvergenceFile<'a> {
    schema_version: u32,
    convergence: &'a ConvergenceReport,
}

#[derive(Serialize)]
struct DesignFile<'a> {
    schema_version: u32,
    design: &'a Provenance,
}

pub fn simulate(
    config: &Path,
    out: Option<&Path>,
    overrides: &Tolerances,
) -> Result<Status, CliError> {
    let (config, base) = ExperimentConfig::load(config)?;
    let experiment = config.resolve(&base, out, overrides)?;
    run_experiment(&experiment)
}

/// Writes `control.json`, `trajectory.json`, `trajectory.csv`,
/// `reports.jsonl` and `summary.json` (plus `design.json` for designed
/// controls and `convergence.json` for automatic orders).
pub fn run_experiment(exp: &Experiment) -> Result<Status, CliError> {
    let dir = &exp.output_dir;
    create_dir(dir)?;
    write_json(&dir.join("control.json"), &ControlFile::new(exp.control.clone()))?;
    if matches!(exp.provenance, Provenance::Pulse(_) | Provenance::Ladder(_)) {
        write_json(
            &dir.join("design.json"),
            &DesignFile {
                schema_version: SCHEMA_VERSION,
                design: &exp.provenance,
            },
        )?;
    }

    let mut summary = Summary {
        schema_version: SCHEMA_VERSION,
        system: exp.system.name(),
        order: None,
        auto_order: matches!(exp.order, Order::Auto { .. }),
        converged: None,
        horizon: exp.control.horizon(),
        segments: exp.control.len(),
        l1_norm: exp.control.l1_norm(),
        samples: 0,
        terminal_populations: Vec::new(),
        checks: Vec::new(),
        status: "fail",
    };

    let order = match exp.order {
        Order::Fixed(n) => n,
        Order::Auto { eps, cap } => {
            let report =
                empirical_truncation_order(&exp.system, &exp.control, &exp.initial_state, eps, cap)?;
            write_json(
                &dir.join("convergence.json"),
                &ConvergenceFile {
                    schema_version: SCHEMA_VERSION,
                    convergence: &report,
                },
            )?;
            summary.converged = Some(report.converged());
            match report.order {
                Some(n) => n,
                None => {
                    log::error!(
                        "no order up to {cap} reaches {eps:e}; see convergence.json"
                    );
                    write_json(&dir.join("summary.json"), &summary)?;
                    return Ok(Status::Fail);
                }
            }
        }
    };

    let comp = compress(&exp.system, order)?;
    let psi0 = exp.initial_state.to_vector(order)?;
    let mut checks = Checks::new(&exp.checks, &exp.system, order)?;
    let mut recorder = TrajectoryRecorder::new(exp.system.name(), order, &exp.control);
    propagate_observed(
        &comp,
        &exp.control,
        &psi0,
        exp.sample_dt,
        &mut (&mut recorder, &mut checks),
    )?;
    let trajectory = recorder.finish();
    let reports = checks.reports();

    let csv_path = dir.join("trajectory.csv");
    let file = fs::File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    trajectory
        .write_csv(BufWriter::new(file))
        .map_err(|e| CliError::io(&csv_path, e))?;
    let lines: Vec<String> = reports.iter().map(|r| r.to_json_line()).collect();
    write_lines(&dir.join("reports.jsonl"), &lines)?;

    let pass = !any_failed(&reports);
    summary.order = Some(order);
    summary.samples = trajectory.len();
    summary.terminal_populations = trajectory.final_state().iter().map(|z| z.norm_sqr()).collect();
    summary.checks = reports
        .iter()
        .map(|r| CheckLine {
            check: &r.check,
            verdict: &r.verdict,
        })
        .collect();
    summary.status = if pass { "pass" } else { "fail" };
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(&dir.join("trajectory.json"), &TrajectoryFile::new(trajectory))?;
    Ok(Status::from_pass(pass))
}
