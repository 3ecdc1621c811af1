use std::path::Path;

use bilinear_core::galerkin::truncation_error;
use bilinear_core::synth::amplitude_scaling_experiment;
use bilinear_core::SpectralSystem;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{validate_state, SweepConfig, SweepGrid};
use crate::error::{invalid, CliError, Status};
use crate::files::{create_dir, write_json, SCHEMA_VERSION};

/// One row of the aggregated table.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct Cell {
    cell: usize,
    /// `n` for amplitude scaling, `N` for truncation sweeps.
    parameter: usize,
    /// Fidelity, or the `N`-vs-`2N` error.
    value: f64,
    amplitude: Option<f64>,
    horizon: Option<f64>,
    l1_norm: Option<f64>,
    reference_order: Option<usize>,
}

#[derive(Serialize)]
struct SweepFile<'a> {
    schema_version: u32,
    system: &'a str,
    kind: &'static str,
    cells: &'a [Cell],
    /// Whether the requested trend holds, if one was requested.
    trend: Option<bool>,
}

/// Executes the grid with up to `jobs` concurrent cells. Each cell writes
/// `cells/cell-NNNN.json`; after all cells finish, `sweep.csv` and
/// `sweep.json` aggregate them in grid order.
pub fn sweep(config: &Path, out: Option<&Path>, jobs: usize) -> Result<Status, CliError> {
    let (config, base) = SweepConfig::load(config)?;
    let sys = config.system.load(&base)?;
    let dir = match (out, &config.output_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(d)) => crate::files::resolve(&base, d),
        (None, None) => {
            return Err(CliError::config(
                "no output directory: set output_dir or pass --out",
            ))
        }
    };
    if jobs == 0 {
        return Err(CliError::config("--jobs must be at least 1"));
    }
    let plan = Plan::validate(&config.sweep, &sys, &base)?;

    let cell_dir = dir.join("cells");
    create_dir(&cell_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    let cells: Vec<Cell> = pool.install(|| {
        (0..plan.len())
            .into_par_iter()
            .map(|i| {
                let cell = plan.run(&sys, i)?;
                write_json(&cell_dir.join(format!("cell-{i:04}.json")), &cell)?;
                Ok(cell)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;

    let trend = plan.trend(&cells);
    let csv_path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&csv_path)
        .map_err(|e| CliError::config(format!("{}: {e}", csv_path.display())))?;
    if cells.is_empty() {
        w.write_record(["cell", "parameter", "value", "amplitude", "horizon", "l1_norm", "reference_order"])
            .and_then(|_| w.flush().map_err(csv::Error::from))
            .map_err(|e| CliError::config(format!("{}: {e}", csv_path.display())))?;
    }
    for c in &cells {
        w.serialize(c)
            .map_err(|e| CliError::config(format!("{}: {e}", csv_path.display())))?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    write_json(
        &dir.join("sweep.json"),
        &SweepFile {
            schema_version: SCHEMA_VERSION,
            system: sys.name(),
            kind: plan.kind(),
            cells: &cells,
            trend,
        },
    )?;
    Ok(Status::from_pass(trend != Some(false)))
}

/// A validated grid.
enum Plan<'g> {
    Scaling {
        grid: &'g SweepGrid,
        n: &'g [usize],
        n_max: usize,
        slack: Option<f64>,
    },
    Truncation {
        grid: &'g SweepGrid,
        control: bilinear_core::PiecewiseConstantControl,
        orders: &'g [usize],
        decreasing: bool,
    },
}

impl<'g> Plan<'g> {
    fn validate(grid: &'g SweepGrid, sys: &SpectralSystem, base: &Path) -> Result<Self, CliError> {
        match grid {
            SweepGrid::AmplitudeScaling {
                transition,
                base_amplitude,
                n,
                order,
                require_monotone,
                ..
            } => {
                if n.contains(&0) {
                    return Err(CliError::config("scaling factors n must be positive"));
                }
                let top = transition.0.max(transition.1);
                if *order < top {
                    return Err(CliError::config(format!(
                        "order {order} is below level {top} of the transition"
                    )));
                }
                sys.check_level(*order).map_err(invalid("order"))?;
                if !(*base_amplitude >= 0.0 && base_amplitude.is_finite()) {
                    return Err(CliError::config("base_amplitude must be finite and non-negative"));
                }
                Ok(Plan::Scaling {
                    grid,
                    n,
                    n_max: n.iter().copied().max().unwrap_or(0),
                    slack: *require_monotone,
                })
            }
            SweepGrid::Truncation {
                control,
                initial_state,
                orders,
                require_decreasing,
                ..
            } => {
                validate_state(initial_state)?;
                for &n in orders.iter() {
                    if n < initial_state.support() {
                        return Err(CliError::config(format!(
                            "order {n} is below the initial state's support"
                        )));
                    }
                    sys.check_level(2 * n).map_err(invalid("reference order"))?;
                }
                let (control, _) = control.resolve(sys, base)?;
                Ok(Plan::Truncation {
                    grid,
                    control,
                    orders,
                    decreasing: *require_decreasing,
                })
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            Plan::Scaling { n, .. } => n.len(),
            Plan::Truncation { orders, .. } => orders.len(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Plan::Scaling { .. } => "amplitude-scaling",
            Plan::Truncation { .. } => "truncation",
        }
    }

    fn run(&self, sys: &SpectralSystem, i: usize) -> Result<Cell, CliError> {
        match self {
            Plan::Scaling { grid, n, n_max, .. } => {
                let SweepGrid::AmplitudeScaling {
                    transition,
                    base_amplitude,
                    order,
                    shape,
                    design,
                    ..
                } = grid
                else {
                    unreachable!("plan matches its grid");
                };
                // T* depends only on n_max, so each cell runs its own n
                let list = [n[i], *n_max];
                let rows = amplitude_scaling_experiment(
                    sys,
                    *transition,
                    *base_amplitude,
                    shape,
                    &list[..if n[i] == *n_max { 1 } else { 2 }],
                    *order,
                    design,
                )?;
                let row = &rows[0];
                Ok(Cell {
                    cell: i,
                    parameter: row.n,
                    value: row.fidelity,
                    amplitude: Some(row.amplitude),
                    horizon: Some(row.horizon),
                    l1_norm: Some(row.l1_norm),
                    reference_order: None,
                })
            }
            Plan::Truncation {
                grid,
                control,
                orders,
                ..
            } => {
                let SweepGrid::Truncation {
                    initial_state,
                    scheme,
                    ..
                } = grid
                else {
                    unreachable!("plan matches its grid");
                };
                let n = orders[i];
                let row = truncation_error(sys, control, initial_state, n, 2 * n, *scheme)?;
                Ok(Cell {
                    cell: i,
                    parameter: n,
                    value: row.error,
                    amplitude: None,
                    horizon: Some(control.horizon()),
                    l1_norm: Some(control.l1_norm()),
                    reference_order: Some(row.reference_order),
                })
            }
        }
    }

    fn trend(&self, cells: &[Cell]) -> Option<bool> {
        match self {
            Plan::Scaling { slack, .. } => slack.map(|s| {
                cells.windows(2).all(|w| w[1].value >= w[0].value - s)
            }),
            Plan::Truncation { decreasing, .. } => {
                decreasing.then(|| cells.windows(2).all(|w| w[1].value < w[0].value))
            }
        }
    }
}
