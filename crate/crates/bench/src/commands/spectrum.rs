use std::io::{self, Write};
use std::path::Path;

use bilinear_core::spectral::{coupling_norm_column, COUPLING_ZERO};
use bilinear_core::SpectralSystem;
use serde::Serialize;

use crate::error::{invalid, CliError, Status};
use crate::files::create_dir;

/// Tolerance on `|b_jk + conj(b_kj)|` before the table is rejected.
const SKEW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub k: usize,
    pub lambda: f64,
    /// `|λ_{k+1} - λ_k|`; absent on the last row.
    pub gap: Option<f64>,
    /// Number of `j ≤ N` with `b_jk ≠ 0`.
    pub coupled: usize,
    /// Largest `|j - k|` with `b_jk ≠ 0`, `j ≤ N`.
    pub band: usize,
    /// `(Σ_{j ≤ N} |b_jk|²)^{1/2}`.
    pub column_norm: f64,
}

pub fn spectrum_table(sys: &SpectralSystem, order: usize) -> Result<Vec<SpectrumRow>, CliError> {
    if order == 0 {
        return Err(CliError::config("--n must be at least 1"));
    }
    sys.check_level(order).map_err(invalid("--n"))?;
    (1..=order)
        .map(|k| {
            let mut coupled = 0;
            let mut band = 0;
            for j in 1..=order {
                if sys.coupling(j, k).norm() > COUPLING_ZERO {
                    coupled += 1;
                    band = band.max(j.abs_diff(k));
                }
            }
            Ok(SpectrumRow {
                k,
                lambda: sys.eigenvalue(k),
                gap: (k < order).then(|| sys.transition_frequency(k, k + 1)),
                coupled,
                band,
                column_norm: coupling_norm_column(sys, k, order)?,
            })
        })
        .collect()
}

fn write_table<W: Write>(rows: &[SpectrumRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Prints `k, lambda, gap, coupled, band, column_norm` as CSV; fails if the
/// coupling table is not skew-Hermitian or couples degenerate levels.
pub fn spectrum(sys: &SpectralSystem, order: usize, out: Option<&Path>) -> Result<Status, CliError> {
    let rows = spectrum_table(sys, order)?;
    let stdout = io::stdout();
    write_table(&rows, stdout.lock()).map_err(|e| CliError::config(e.to_string()))?;
    if let Some(dir) = out {
        create_dir(dir)?;
        let path = dir.join("spectrum.csv");
        let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_table(&rows, file).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    }

    let defect = sys.skew_hermitian_defect(order);
    let degenerate = sys.degenerate_coupled_pairs(order, 0.0);
    let mut ok = true;
    if defect > SKEW_TOL {
        eprintln!("coupling table is not skew-Hermitian: defect {defect:e}");
        ok = false;
    }
    if !degenerate.is_empty() {
        eprintln!("coupled pairs with equal eigenvalues: {degenerate:?}");
        ok = false;
    }
    Ok(Status::from_pass(ok))
}
