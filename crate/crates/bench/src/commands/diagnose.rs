use std::path::PathBuf;

use bilinear_core::diagnostics::{find_nondegenerate_chain, transition_graph};

use super::{any_failed, load_system, Checks};
use crate::config::{resolve_checks, CheckSpec, Tolerances};
use crate::error::{invalid, CliError, Status};
use crate::files::{create_dir, write_json, write_lines, TrajectoryFile, SCHEMA_VERSION};

#[derive(Debug, Clone)]
pub struct DiagnoseArgs {
    pub system: Option<String>,
    pub system_file: Option<PathBuf>,
    /// Replay checks on this trajectory file.
    pub trajectory: Option<PathBuf>,
    pub checks: Vec<CheckSpec>,
    /// Without a trajectory: order of the transition-graph analysis.
    pub order: Option<usize>,
    pub degeneracy_tol: f64,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
}

/// With `--trajectory`, replays the checks and prints one JSON report per
/// line; otherwise prints the transition-graph structure.
pub fn diagnose(args: &DiagnoseArgs) -> Result<Status, CliError> {
    let sys = load_system(args.system.as_deref(), args.system_file.as_ref())?;
    let Some(path) = &args.trajectory else {
        let order = args
            .order
            .ok_or_else(|| CliError::config("diagnose needs --trajectory or --n"))?;
        let graph = transition_graph(&sys, order, args.degeneracy_tol)
            .map_err(invalid("transition graph"))?;
        let chain = find_nondegenerate_chain(&sys, order, args.degeneracy_tol)?;
        let value = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "system": sys.name(),
            "order": order,
            "edges": graph.edges.len(),
            "degenerate_edges": graph.edges.iter().filter(|e| e.degenerate).count(),
            "coincidences": graph.coincidences(),
            "chain": chain,
        });
        if let Some(dir) = &args.out {
            create_dir(dir)?;
            write_json(&dir.join("structure.json"), &value)?;
        }
        println!("{}", serde_json::to_string_pretty(&value).expect("structure serializes"));
        return Ok(Status::Pass);
    };

    let trajectory = TrajectoryFile::load(path)?;
    if trajectory.system() != sys.name() {
        return Err(CliError::config(format!(
            "trajectory was recorded for {} but the system is {}",
            trajectory.system(),
            sys.name()
        )));
    }
    if args.checks.is_empty() {
        return Err(CliError::config("no checks requested; use --check"));
    }
    sys.check_level(trajectory.order()).map_err(invalid("trajectory order"))?;
    let resolved = resolve_checks(&args.checks, &sys, &args.tolerances)?;
    let mut checks = Checks::new(&resolved, &sys, trajectory.order())?;
    trajectory.replay(&mut checks);
    let reports = checks.reports();
    let lines: Vec<String> = reports.iter().map(|r| r.to_json_line()).collect();
    for line in &lines {
        println!("{line}");
    }
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_lines(&dir.join("reports.jsonl"), &lines)?;
    }
    Ok(Status::from_pass(!any_failed(&reports)))
}
