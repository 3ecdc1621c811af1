use std::path::PathBuf;

use bilinear_core::galerkin::{
    empirical_truncation_order, harmonic_truncation_bound_ln, harmonic_truncation_order,
};
use bilinear_core::{Error, StateSpec};
use serde::Serialize;

use super::load_system;
use crate::config::{resolve_order, Order, OrderSpec, AutoOrder};
use crate::error::{invalid, CliError, Status};
use crate::files::{create_dir, write_json, ControlFile, SCHEMA_VERSION};

#[derive(Debug, Clone)]
pub struct GalerkinOrderArgs {
    /// Only `harmonic` is available.
    pub formula: Option<String>,
    /// System for the empirical doubling search.
    pub empirical: Option<String>,
    pub system_file: Option<PathBuf>,
    pub budget: Option<f64>,
    pub eps: f64,
    pub control: Option<PathBuf>,
    pub cap: Option<usize>,
    pub initial_level: usize,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FormulaResult {
    schema_version: u32,
    formula: &'static str,
    budget: f64,
    eps: f64,
    order: Option<usize>,
    /// `ln f(N)` at the returned order.
    ln_bound: Option<f64>,
}

/// Prints the order as JSON; exits 1 when no order meets the target.
pub fn galerkin_order(args: &GalerkinOrderArgs) -> Result<Status, CliError> {
    let (value, status) = match (&args.formula, &args.empirical, &args.system_file) {
        (Some(formula), None, None) => formula_order(formula, args)?,
        (None, name, file) if name.is_some() || file.is_some() => empirical_order(args)?,
        _ => {
            return Err(CliError::config(
                "give exactly one of --formula and --empirical/--system-file",
            ))
        }
    };
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_json(&dir.join("galerkin-order.json"), &value)?;
    }
    println!("{}", serde_json::to_string_pretty(&value).expect("result serializes"));
    Ok(status)
}

fn formula_order(
    formula: &str,
    args: &GalerkinOrderArgs,
) -> Result<(serde_json::Value, Status), CliError> {
    if formula != "harmonic" {
        return Err(CliError::config(format!(
            "unknown formula {formula:?}; only \"harmonic\" is available"
        )));
    }
    let budget = args
        .budget
        .ok_or_else(|| CliError::config("--formula needs an L1 budget -K"))?;
    let (order, status) = match harmonic_truncation_order(budget, args.eps) {
        Ok(n) => (Some(n), Status::Pass),
        Err(Error::OrderCapExceeded { .. }) => (None, Status::Fail),
        Err(e) => return Err(invalid("galerkin-order")(e)),
    };
    let result = FormulaResult {
        schema_version: SCHEMA_VERSION,
        formula: "harmonic",
        budget,
        eps: args.eps,
        order,
        ln_bound: order.map(|n| harmonic_truncation_bound_ln(n, budget)),
    };
    Ok((serde_json::to_value(result).expect("result serializes"), status))
}

fn empirical_order(args: &GalerkinOrderArgs) -> Result<(serde_json::Value, Status), CliError> {
    let sys = load_system(args.empirical.as_deref(), args.system_file.as_ref())?;
    let control_path = args
        .control
        .as_ref()
        .ok_or_else(|| CliError::config("--empirical needs --control FILE"))?;
    let control = ControlFile::load(control_path)?;
    control
        .check_within(sys.control_set())
        .map_err(invalid("control"))?;
    if args.initial_level == 0 {
        return Err(CliError::config("--initial must be at least 1"));
    }
    let psi0 = StateSpec::Basis(args.initial_level);
    let spec = OrderSpec::Auto {
        auto: AutoOrder {
            eps: args.eps,
            cap: args.cap,
        },
    };
    let Order::Auto { eps, cap } = resolve_order(&spec, &sys, args.initial_level)? else {
        unreachable!("automatic order spec");
    };
    let report = empirical_truncation_order(&sys, &control, &psi0, eps, cap)?;
    let status = Status::from_pass(report.converged());
    let value = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "convergence": report,
    });
    Ok((value, status))
}
