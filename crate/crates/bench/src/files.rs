//! Versioned JSON documents read and written by the commands.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bilinear_core::{Complex64, ControlSet, PiecewiseConstantControl, SpectralSystem, Trajectory};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliError};

pub const SCHEMA_VERSION: u32 = 1;

pub fn check_version(found: u32, path: &Path) -> Result<(), CliError> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "{}: schema_version {found} is not supported (expected {SCHEMA_VERSION})",
            path.display()
        )))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_lines(path: &Path, lines: &[String]) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// `path` relative to `base` unless absolute.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// External system: `λ_k` for `k ≤ N_file` and sparse coupling triplets
/// `(j, k, Re b_jk, Im b_jk)`, 1-based. A triplet without its mirror implies
/// `b_kj = -conj(b_jk)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralDataFile {
    pub schema_version: u32,
    pub name: String,
    pub eigenvalues: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64, f64)>,
    #[serde(default = "ControlSet::real_line")]
    pub control_set: ControlSet,
    #[serde(default)]
    pub coupling_opnorm: Option<f64>,
}

impl SpectralDataFile {
    pub fn load(path: &Path) -> Result<SpectralSystem, CliError> {
        let file: SpectralDataFile = read_json(path)?;
        check_version(file.schema_version, path)?;
        let triplets: Vec<(usize, usize, Complex64)> = file
            .couplings
            .iter()
            .map(|&(j, k, re, im)| (j, k, Complex64::new(re, im)))
            .collect();
        SpectralSystem::tabulated(
            file.name,
            file.eigenvalues,
            &triplets,
            file.control_set,
            file.coupling_opnorm,
        )
        .map_err(invalid(&path.display().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlFile {
    pub schema_version: u32,
    pub control: PiecewiseConstantControl,
}

impl ControlFile {
    pub fn new(control: PiecewiseConstantControl) -> Self {
        ControlFile {
            schema_version: SCHEMA_VERSION,
            control,
        }
    }

    pub fn load(path: &Path) -> Result<PiecewiseConstantControl, CliError> {
        let file: ControlFile = read_json(path)?;
        check_version(file.schema_version, path)?;
        Ok(file.control)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub schema_version: u32,
    pub trajectory: Trajectory,
}

impl TrajectoryFile {
    pub fn new(trajectory: Trajectory) -> Self {
        TrajectoryFile {
            schema_version: SCHEMA_VERSION,
            trajectory,
        }
    }

    pub fn load(path: &Path) -> Result<Trajectory, CliError> {
        let file: TrajectoryFile = read_json(path)?;
        check_version(file.schema_version, path)?;
        Ok(file.trajectory)
    }
}
