//! Bilinear systems `dψ/dt = (A + u B) ψ` described purely by spectral data.
//!
//! A system is a sequence of eigenvalues `λ_k` (the drift acts as
//! `A φ_k = i λ_k φ_k`) and a coupling matrix `b_jk = ⟨φ_j, B φ_k⟩`, both
//! indexed from 1. Eigenvalues are stored with the sign convention
//! `λ_k → -∞`; transition frequencies are always `|λ_j - λ_k|`, so nothing
//! downstream depends on the sign.
//!
//! Four benchmark systems are built in. External systems can be supplied as
//! finite tables of eigenvalues and sparse couplings.

pub mod oscillator;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Couplings with modulus at or below this are treated as structural zeros.
pub const COUPLING_ZERO: f64 = 1e-14;

/// Tolerance used when validating skew-Hermiticity of tabulated couplings.
pub const TABLE_HERMITICITY_TOL: f64 = 1e-10;

/// The set `U` of admissible control values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlSet {
    /// Closed interval; a missing bound is unbounded.
    Interval { lo: Option<f64>, hi: Option<f64> },
    /// Finite set of values, which must contain 0 and 1.
    Finite { values: Vec<f64> },
}

impl ControlSet {
    pub fn real_line() -> Self {
        ControlSet::Interval { lo: None, hi: None }
    }

    pub fn contains(&self, u: f64) -> bool {
        match self {
            ControlSet::Interval { lo, hi } => {
                u.is_finite() && lo.is_none_or(|lo| u >= lo) && hi.is_none_or(|hi| u <= hi)
            }
            ControlSet::Finite { values } => values.contains(&u),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.contains(0.0) && self.contains(1.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "control set must contain 0 and 1".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    SquareWell,
    Harmonic,
    PlanarRotor,
    Anharmonic { alpha: u32 },
    Tabulated(Table),
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    eigenvalues: Vec<f64>,
    couplings: BTreeMap<(usize, usize), Complex64>,
    coupling_opnorm: Option<f64>,
}

/// A bilinear control system given by `λ_k` and `b_jk`.
///
/// Values are immutable once built. Every index is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSystem {
    name: String,
    model: Model,
    control_set: ControlSet,
}

/// Name of one of the built-in systems, as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinSystem {
    SquareWell,
    Harmonic,
    PlanarRotor,
    Anharmonic { alpha: u32 },
}

impl FromStr for BuiltinSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "square-well" => return Ok(BuiltinSystem::SquareWell),
            "harmonic" => return Ok(BuiltinSystem::Harmonic),
            "planar-rotor" => return Ok(BuiltinSystem::PlanarRotor),
            _ => {}
        }
        let args = s
            .strip_prefix("anharmonic(")
            .and_then(|rest| rest.strip_suffix(')'))
            .ok_or_else(|| Error::UnknownSystem(s.to_string()))?;
        let value = args
            .trim()
            .strip_prefix("alpha")
            .map(str::trim_start)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| Error::UnknownSystem(s.to_string()))?;
        let alpha: i64 = value
            .trim()
            .parse()
            .map_err(|_| Error::UnknownSystem(s.to_string()))?;
        if alpha < 1 {
            return Err(Error::InvalidParameter(format!(
                "anharmonic alpha must be >= 1, got {alpha}"
            )));
        }
        Ok(BuiltinSystem::Anharmonic {
            alpha: alpha as u32,
        })
    }
}

impl fmt::Display for BuiltinSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinSystem::SquareWell => f.write_str("square-well"),
            BuiltinSystem::Harmonic => f.write_str("harmonic"),
            BuiltinSystem::PlanarRotor => f.write_str("planar-rotor"),
            BuiltinSystem::Anharmonic { alpha } => write!(f, "anharmonic(alpha={alpha})"),
        }
    }
}

impl BuiltinSystem {
    pub fn build(self) -> Result<SpectralSystem> {
        Ok(match self {
            BuiltinSystem::SquareWell => SpectralSystem::square_well(),
            BuiltinSystem::Harmonic => SpectralSystem::harmonic(),
            BuiltinSystem::PlanarRotor => SpectralSystem::planar_rotor(),
            BuiltinSystem::Anharmonic { alpha } => SpectralSystem::anharmonic(alpha)?,
        })
    }
}

impl SpectralSystem {
    /// Particle in the box `(0, π)` driven by a uniform field, `B = i x`.
    ///
    /// Math note: `b_jk` is `i` times the tabulated position element
    /// `(-1)^{j+k} 2jk/(j²-k²)²` (non-zero only for `j - k` odd). That table
    /// uses the basis `sin(kx)/√2`, which is not normalized on `(0, π)`; the
    /// normalized elements differ by the positive factor `4/π`. The diagonal
    /// is set to zero although `⟨φ_k, x φ_k⟩ = π/2`: a constant diagonal only
    /// adds the global phase `exp(i (π/2) ∫u)`.
    pub fn square_well() -> Self {
        SpectralSystem {
            name: BuiltinSystem::SquareWell.to_string(),
            model: Model::SquareWell,
            control_set: ControlSet::real_line(),
        }
    }

    /// Quantum harmonic oscillator with dipole coupling; `B` is tridiagonal.
    pub fn harmonic() -> Self {
        SpectralSystem {
            name: BuiltinSystem::Harmonic.to_string(),
            model: Model::Harmonic,
            control_set: ControlSet::real_line(),
        }
    }

    /// Rigid planar rotor on odd wave functions, `B = -i cos θ`.
    pub fn planar_rotor() -> Self {
        SpectralSystem {
            name: BuiltinSystem::PlanarRotor.to_string(),
            model: Model::PlanarRotor,
            control_set: ControlSet::real_line(),
        }
    }

    /// Strongly perturbed oscillator `(-Δ/2 + x²)^α + (-Δ/2 + x²)^{-1}` on
    /// even functions, driven by `B = -i x⁴`.
    ///
    /// Level `n` is the Hermite function of index `2(n - 1)`.
    pub fn anharmonic(alpha: u32) -> Result<Self> {
        if alpha < 1 {
            return Err(Error::InvalidParameter(format!(
                "anharmonic alpha must be >= 1, got {alpha}"
            )));
        }
        Ok(SpectralSystem {
            name: BuiltinSystem::Anharmonic { alpha }.to_string(),
            model: Model::Anharmonic { alpha },
            control_set: ControlSet::real_line(),
        })
    }

    /// Build a system from finite tables.
    ///
    /// `couplings` holds 1-based `(j, k, b_jk)` triplets. A missing mirror
    /// entry `(k, j)` is filled in as `-conj(b_jk)`; a present one must agree
    /// within [`TABLE_HERMITICITY_TOL`].
    pub fn tabulated(
        name: impl Into<String>,
        eigenvalues: Vec<f64>,
        couplings: &[(usize, usize, Complex64)],
        control_set: ControlSet,
        coupling_opnorm: Option<f64>,
    ) -> Result<Self> {
        let levels = eigenvalues.len();
        if levels == 0 {
            return Err(Error::InvalidParameter("no eigenvalues listed".into()));
        }
        if let Some(bad) = eigenvalues.iter().position(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eigenvalue {} is not finite",
                bad + 1
            )));
        }
        control_set.validate()?;
        if let Some(norm) = coupling_opnorm {
            if !(norm.is_finite() && norm >= 0.0) {
                return Err(Error::InvalidParameter(
                    "coupling operator norm must be finite and non-negative".into(),
                ));
            }
        }

        let mut table: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(j, k, b) in couplings {
            for index in [j, k] {
                if index == 0 || index > levels {
                    return Err(Error::LevelOutOfRange {
                        index,
                        available: levels,
                    });
                }
            }
            if !(b.re.is_finite() && b.im.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "coupling ({j}, {k}) is not finite"
                )));
            }
            if table.insert((j, k), b).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "coupling ({j}, {k}) listed twice"
                )));
            }
        }
        let listed: Vec<((usize, usize), Complex64)> =
            table.iter().map(|(&key, &b)| (key, b)).collect();
        for ((j, k), b) in listed {
            match table.get(&(k, j)) {
                Some(&mirror) => {
                    let defect = (b + mirror.conj()).norm();
                    if defect > TABLE_HERMITICITY_TOL {
                        return Err(Error::NotSkewHermitian { j, k, defect });
                    }
                }
                None => {
                    table.insert((k, j), -b.conj());
                }
            }
        }
        for (&(j, k), b) in &table {
            if j != k && b.norm() > COUPLING_ZERO && eigenvalues[j - 1] == eigenvalues[k - 1] {
                return Err(Error::InvalidParameter(format!(
                    "levels {j} and {k} are degenerate but coupled"
                )));
            }
        }
        Ok(SpectralSystem {
            name: name.into(),
            model: Model::Tabulated(Table {
                eigenvalues,
                couplings: table,
                coupling_opnorm,
            }),
            control_set,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn control_set(&self) -> &ControlSet {
        &self.control_set
    }

    /// Number of levels the system defines, `None` when infinite.
    pub fn levels(&self) -> Option<usize> {
        match &self.model {
            Model::Tabulated(t) => Some(t.eigenvalues.len()),
            _ => None,
        }
    }

    pub fn anharmonic_alpha(&self) -> Option<u32> {
        match self.model {
            Model::Anharmonic { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Checks that `index` is a valid level.
    pub fn check_level(&self, index: usize) -> Result<()> {
        let available = self.levels().unwrap_or(usize::MAX);
        if index == 0 || index > available {
            Err(Error::LevelOutOfRange { index, available })
        } else {
            Ok(())
        }
    }

    /// `λ_k`.
    ///
    /// Panics if `k` is 0 or beyond a tabulated system's range.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k >= 1, "levels are 1-based");
        let kf = k as f64;
        match &self.model {
            Model::SquareWell => -kf * kf / 2.0,
            Model::Harmonic => -(kf - 0.5),
            Model::PlanarRotor => -kf * kf,
            Model::Anharmonic { alpha } => {
                let mu = oscillator::level_energy(2 * (k - 1));
                -(mu.powi(*alpha as i32) + mu.recip())
            }
            Model::Tabulated(t) => t.eigenvalues[k - 1],
        }
    }

    /// `b_jk = ⟨φ_j, B φ_k⟩`.
    ///
    /// Panics if an index is 0 or beyond a tabulated system's range.
    pub fn coupling(&self, j: usize, k: usize) -> Complex64 {
        assert!(j >= 1 && k >= 1, "levels are 1-based");
        let zero = Complex64::new(0.0, 0.0);
        match &self.model {
            Model::SquareWell => {
                if (j + k) % 2 == 0 {
                    return zero;
                }
                // j + k odd here, so (-1)^{j+k} = -1
                let (jf, kf) = (j as f64, k as f64);
                let d = jf * jf - kf * kf;
                Complex64::new(0.0, -2.0 * jf * kf / (d * d))
            }
            Model::Harmonic => {
                if j + 1 == k {
                    Complex64::new(0.0, -(k as f64 / 2.0).sqrt())
                } else if j == k + 1 {
                    Complex64::new(0.0, -((k as f64 + 1.0) / 2.0).sqrt())
                } else {
                    zero
                }
            }
            Model::PlanarRotor => {
                if j.abs_diff(k) == 1 {
                    Complex64::new(0.0, -0.5)
                } else {
                    zero
                }
            }
            Model::Anharmonic { .. } => Complex64::new(
                0.0,
                -oscillator::quartic_position_element(2 * (j - 1), 2 * (k - 1)),
            ),
            Model::Tabulated(t) => {
                assert!(j <= t.eigenvalues.len() && k <= t.eigenvalues.len());
                t.couplings.get(&(j, k)).copied().unwrap_or(zero)
            }
        }
    }

    /// `|λ_j - λ_k|`.
    pub fn transition_frequency(&self, j: usize, k: usize) -> f64 {
        (self.eigenvalue(j) - self.eigenvalue(k)).abs()
    }

    /// Known upper bound on the coupling constant `c_k(A, B)`.
    pub fn known_coupling_bound(&self, k: f64) -> Option<f64> {
        match self.model {
            Model::Harmonic => Some(3f64.powf(k) - 1.0),
            Model::PlanarRotor => Some((4f64.powf(k) - 1.0) / 2.0),
            _ => None,
        }
    }

    /// Operator norm of `B` on the whole space, when `B` is bounded and the
    /// norm is declared.
    pub fn coupling_opnorm(&self) -> Option<f64> {
        match &self.model {
            // multiplication by cos θ
            Model::PlanarRotor => Some(1.0),
            Model::Tabulated(t) => t.coupling_opnorm,
            _ => None,
        }
    }

    /// Structural bandwidth of `B` (`b_jk = 0` for `|j - k|` above it), if the
    /// system is banded.
    pub fn structural_bandwidth(&self) -> Option<usize> {
        match self.model {
            Model::Harmonic | Model::PlanarRotor => Some(1),
            Model::Anharmonic { .. } => Some(2),
            _ => None,
        }
    }

    /// Largest `|b_jk + conj(b_kj)|` over `1 ≤ j, k ≤ n`.
    pub fn skew_hermitian_defect(&self, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 1..=n {
            for k in j..=n {
                worst = worst.max((self.coupling(j, k) + self.coupling(k, j).conj()).norm());
            }
        }
        worst
    }

    /// Pairs `j < k ≤ n` with `|λ_j - λ_k| ≤ tol` but `b_jk ≠ 0`.
    pub fn degenerate_coupled_pairs(&self, n: usize, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 1..=n {
            for k in (j + 1)..=n {
                if (self.eigenvalue(j) - self.eigenvalue(k)).abs() <= tol
                    && self.coupling(j, k).norm() > COUPLING_ZERO
                {
                    out.push((j, k));
                }
            }
        }
        out
    }
}

/// Truncated `‖B φ_n‖ = (Σ_{j ≤ order} |b_jn|²)^{1/2}`.
pub fn coupling_norm_column(sys: &SpectralSystem, n: usize, order: usize) -> Result<f64> {
    if n == 0 || n > order {
        return Err(Error::LevelOutOfRange {
            index: n,
            available: order,
        });
    }
    sys.check_level(order)?;
    let range = match sys.structural_bandwidth() {
        Some(w) => n.saturating_sub(w).max(1)..=(n + w).min(order),
        None => 1..=order,
    };
    Ok(range
        .map(|j| sys.coupling(j, n).norm_sqr())
        .sum::<f64>()
        .sqrt())
}
