use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::efficiency::{rendered_coefficient, waveform_efficiency};
use super::{PeriodicPulse, PulseShape};
use crate::error::{Error, Result};
use crate::galerkin::compress;
use crate::propagator::{terminal_state, PiecewiseConstantControl, StateSpec};
use crate::spectral::{SpectralSystem, COUPLING_ZERO};

pub const DEFAULT_STEPS_PER_PERIOD: usize = 64;

/// Relative tolerance for gap coincidences.
pub const DEFAULT_COLLISION_TOL: f64 = 1e-9;

/// Harmonics of the waveform below this efficiency are treated as absent.
const HARMONIC_PRESENT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignOptions {
    /// Starting rendering resolution.
    pub steps_per_period: usize,
    /// Raise the resolution (up to twice the start) until no harmonic that
    /// exists only through rendering hits a gap sharing a level with the
    /// driven transition.
    pub avoid_aliasing: bool,
    /// Highest level scanned for resonance collisions; `None` scans until
    /// gaps from the driven levels pass the highest rendered harmonic
    /// considered.
    pub collision_depth: Option<usize>,
    pub collision_tol: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
            avoid_aliasing: true,
            collision_depth: None,
            collision_tol: DEFAULT_COLLISION_TOL,
        }
    }
}

/// Levels scanned by default never exceed this.
pub const MAX_SCAN_DEPTH: usize = 4096;

/// Rendered harmonics weaker than this relative to the resonant one are
/// treated as absent.
const ALIAS_PRESENT: f64 = 1e-9;

/// Smallest depth past which both driven levels are more than
/// `max_harmonic` base gaps away from every further level.
fn default_depth(sys: &SpectralSystem, (j, k): (usize, usize), max_harmonic: f64) -> usize {
    let base = sys.transition_frequency(j, k);
    let limit = sys.levels().unwrap_or(MAX_SCAN_DEPTH);
    let mut depth = j.max(k);
    while depth < limit {
        let next = depth + 1;
        let near = sys.transition_frequency(j, next).min(sys.transition_frequency(k, next));
        if near > max_harmonic * base {
            break;
        }
        depth = next;
    }
    if depth == MAX_SCAN_DEPTH {
        log::warn!("collision scan for ({j}, {k}) stopped at depth {MAX_SCAN_DEPTH}");
    }
    depth
}

/// A coupled pair whose gap is an integer multiple of the driven gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub pair: (usize, usize),
    pub harmonic: u32,
}

/// A collision at a harmonic the rendered control contains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionWarning {
    pub pair: (usize, usize),
    pub harmonic: u32,
    /// `|c_h| / |c₁|` of the rendered waveform.
    pub strength: f64,
    /// Whether the continuous waveform also has this harmonic.
    pub intrinsic: bool,
}

/// Coupled pairs `l < m ≤ depth`, other than `{j, k}`, with
/// `|λ_l - λ_m|` within `tol · |λ_j - λ_k|` of a multiple of `|λ_j - λ_k|`.
pub fn resonance_collisions(
    sys: &SpectralSystem,
    transition: (usize, usize),
    depth: usize,
    tol: f64,
) -> Result<Vec<Collision>> {
    let (j, k) = transition;
    sys.check_level(j)?;
    sys.check_level(k)?;
    let base = sys.transition_frequency(j, k);
    if !(base > 0.0) {
        return Err(Error::DegenerateLevels { j, k });
    }
    let depth = sys.levels().map_or(depth, |n| depth.min(n));
    let own = (j.min(k), j.max(k));
    let mut out = Vec::new();
    for l in 1..=depth {
        for m in (l + 1)..=depth {
            if (l, m) == own || sys.coupling(l, m).norm() <= COUPLING_ZERO {
                continue;
            }
            let gap = sys.transition_frequency(l, m);
            let h = (gap / base).round();
            if (gap - h * base).abs() <= tol * base {
                out.push(Collision {
                    pair: (l, m),
                    harmonic: h as u32,
                });
            }
        }
    }
    Ok(out)
}

/// Resonant π-pulse for one transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferDesign {
    pub pulse: PeriodicPulse,
    pub control: PiecewiseConstantControl,
    /// `|b_jk|`.
    pub coupling: f64,
    /// `|(1/T) ∫₀^T s(τ) e^{iωτ} dτ|` of the rendered unit-amplitude waveform.
    pub resonant_coefficient: f64,
    /// Efficiency of the rendered waveform.
    pub efficiency: f64,
    /// `π / (2 a |b_jk| |c₁|)`.
    pub pi_time: f64,
    /// Two-level rotating-wave population of the target after the rendered
    /// repetitions.
    pub predicted_population: f64,
    pub l1_norm: f64,
    pub steps_per_period: usize,
    pub collision_depth: usize,
    /// Collisions at harmonics the rendered control contains.
    pub warnings: Vec<CollisionWarning>,
}

/// Designs a resonant periodic pulse moving population from `j` to `k`.
///
/// Averaging the interaction-picture equations over one period leaves the
/// two-level coupling `a b_jk c₁`, so the target population after time `t`
/// is `sin²(a |b_jk| |c₁| t)`; repetitions are rounded up to cover the
/// π-time.
pub fn design_transfer(
    sys: &SpectralSystem,
    transition: (usize, usize),
    amplitude: f64,
    shape: &PulseShape,
    options: &DesignOptions,
) -> Result<TransferDesign> {
    let (j, k) = transition;
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "amplitude must be positive, got {amplitude}"
        )));
    }
    let unit = PeriodicPulse::new(sys, transition, shape.clone(), 1.0, 1)?;
    let b = sys.coupling(j, k).norm();
    if b <= COUPLING_ZERO {
        return Err(Error::NoTransfer { j, k });
    }
    let start = options.steps_per_period;
    if start < 2 {
        return Err(Error::InvalidParameter(
            "at least 2 steps per period are needed".into(),
        ));
    }
    let last = if options.avoid_aliasing { 2 * start } else { start };
    let depth_for = |steps: usize| {
        options
            .collision_depth
            .unwrap_or_else(|| default_depth(sys, transition, (2 * steps + 1) as f64))
    };
    let scan = resonance_collisions(sys, transition, depth_for(last), options.collision_tol)?;
    let intrinsic = |h: u32| waveform_efficiency(shape, h as f64).is_ok_and(|e| e > HARMONIC_PRESENT);

    let (mut chosen, mut fallback) = (None, None);
    for steps in start..=last {
        let table = unit.period_values(steps);
        let c1 = rendered_coefficient(&table, 1.0).norm();
        if !(c1 > 1e-12) {
            return Err(Error::InvalidParameter(
                "waveform has no component at the transition frequency".into(),
            ));
        }
        let depth = depth_for(steps);
        let warnings: Vec<CollisionWarning> = scan
            .iter()
            .filter(|c| c.pair.1 <= depth)
            .filter_map(|c| {
                let strength = rendered_coefficient(&table, c.harmonic as f64).norm() / c1;
                (strength > ALIAS_PRESENT).then(|| CollisionWarning {
                    pair: c.pair,
                    harmonic: c.harmonic,
                    strength,
                    intrinsic: intrinsic(c.harmonic),
                })
            })
            .collect();
        let aliased = warnings.iter().any(|w| {
            !w.intrinsic && [w.pair.0, w.pair.1].iter().any(|l| *l == j || *l == k)
        });
        let candidate = (steps, table, c1, depth, warnings);
        if !aliased {
            chosen = Some(candidate);
            break;
        }
        fallback.get_or_insert(candidate);
    }
    let chosen = chosen.unwrap_or_else(|| {
        log::warn!("({j}, {k}): no alias-free rendering up to {last} steps per period");
        fallback.expect("at least one resolution tried")
    });
    let (steps, table, c1, depth, warnings) = chosen;
    let mean_abs = table.iter().map(|v| v.abs()).sum::<f64>() / steps as f64;

    let rabi = amplitude * b * c1;
    let pi_time = PI / (2.0 * rabi);
    let repetitions = (pi_time / unit.period() * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let pulse = PeriodicPulse::new(sys, transition, shape.clone(), amplitude, repetitions)?;
    let control = pulse.render(steps)?;
    control.check_within(sys.control_set())?;
    for w in &warnings {
        log::warn!(
            "transition ({j}, {k}): pair {:?} resonates at harmonic {} (strength {:.2e})",
            w.pair,
            w.harmonic,
            w.strength
        );
    }

    let l1_norm = control.l1_norm();
    Ok(TransferDesign {
        predicted_population: (rabi * pulse.horizon()).sin().powi(2),
        coupling: b,
        resonant_coefficient: c1,
        efficiency: c1 / mean_abs,
        pi_time,
        l1_norm,
        steps_per_period: steps,
        collision_depth: depth,
        warnings,
        pulse,
        control,
    })
}

/// Consecutive transfers `1 → 2 → … → top`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderSchedule {
    pub top_level: usize,
    pub legs: Vec<TransferDesign>,
    pub control: PiecewiseConstantControl,
    /// `∫|u|` at the end of each leg.
    pub cumulative_l1: Vec<f64>,
    pub total_l1: f64,
    /// `(5π/4) Σ_{j < top} |b_{j,j+1}|^{-1}`.
    pub l1_bound: f64,
}

pub fn ladder_schedule(
    sys: &SpectralSystem,
    top_level: usize,
    amplitude: f64,
    shape: &PulseShape,
    options: &DesignOptions,
) -> Result<LadderSchedule> {
    if top_level == 0 {
        return Err(Error::LevelOutOfRange {
            index: 0,
            available: sys.levels().unwrap_or(usize::MAX),
        });
    }
    sys.check_level(top_level)?;
    let mut l1_bound = 0.0;
    for j in 1..top_level {
        let b = sys.coupling(j, j + 1).norm();
        if b <= COUPLING_ZERO {
            return Err(Error::BrokenChain { j });
        }
        l1_bound += 1.0 / b;
    }
    l1_bound *= 5.0 * PI / 4.0;

    let mut legs = Vec::with_capacity(top_level.saturating_sub(1));
    let mut control = PiecewiseConstantControl::empty();
    let mut cumulative_l1 = Vec::with_capacity(legs.capacity());
    for j in 1..top_level {
        let leg = design_transfer(sys, (j, j + 1), amplitude, shape, options)?;
        control = control.concat(&leg.control);
        cumulative_l1.push(control.l1_norm());
        legs.push(leg);
    }
    Ok(LadderSchedule {
        top_level,
        total_l1: control.l1_norm(),
        legs,
        control,
        cumulative_l1,
        l1_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub amplitude: f64,
    pub horizon: f64,
    pub l1_norm: f64,
    /// `|⟨φ_k, x(n T*)⟩|`.
    pub fidelity: f64,
}

/// Runs `u*/n` for `n T*` from `φ_j` and records the modulus of the `φ_k`
/// amplitude. `u*` is the pulse of amplitude `base_amplitude`, and `T*` is
/// the horizon of the `n_max` design divided by `n_max`.
#[allow(clippy::too_many_arguments)]
pub fn amplitude_scaling_experiment(
    sys: &SpectralSystem,
    transition: (usize, usize),
    base_amplitude: f64,
    shape: &PulseShape,
    n_list: &[usize],
    order: usize,
    options: &DesignOptions,
) -> Result<Vec<ScalingRow>> {
    let Some(&n_max) = n_list.iter().max() else {
        return Ok(Vec::new());
    };
    if n_list.contains(&0) {
        return Err(Error::InvalidParameter("scaling factors must be positive".into()));
    }
    let (j, k) = transition;
    let comp = compress(sys, order)?;
    let psi0 = StateSpec::Basis(j).to_vector(order)?;
    sys.check_level(k)?;
    if k > order {
        return Err(Error::LevelOutOfRange {
            index: k,
            available: order,
        });
    }
    let reference = design_transfer(sys, transition, base_amplitude / n_max as f64, shape, options)?;
    let t_star = reference.pulse.horizon() / n_max as f64;

    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let amplitude = base_amplitude / n as f64;
        let pulse = reference.pulse.with_amplitude(amplitude)?;
        let horizon = n as f64 * t_star;
        let control = pulse.render_until(horizon, reference.steps_per_period)?;
        control.check_within(sys.control_set())?;
        let x = terminal_state(&comp, &control, &psi0)?;
        rows.push(ScalingRow {
            n,
            amplitude,
            horizon,
            l1_norm: control.l1_norm(),
            fidelity: x[k - 1].norm(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_collides_everywhere() {
        let sys = SpectralSystem::harmonic();
        let c = resonance_collisions(&sys, (1, 2), 10, DEFAULT_COLLISION_TOL).unwrap();
        assert_eq!(c.len(), 8);
        assert!(c.iter().all(|c| c.harmonic == 1 && c.pair.1 == c.pair.0 + 1));
    }

    #[test]
    fn rotor_third_harmonic() {
        let sys = SpectralSystem::planar_rotor();
        let c = resonance_collisions(&sys, (1, 2), 6, DEFAULT_COLLISION_TOL).unwrap();
        assert!(c.contains(&Collision {
            pair: (4, 5),
            harmonic: 3
        }));
        assert!(c.iter().all(|c| c.pair.1 == c.pair.0 + 1));
    }

    #[test]
    fn cosine_has_no_rotor_warning() {
        let sys = SpectralSystem::planar_rotor();
        let d = design_transfer(&sys, (1, 2), 0.05, &PulseShape::cosine(), &Default::default())
            .unwrap();
        assert!(d.warnings.is_empty());
        let sq = design_transfer(&sys, (1, 2), 0.05, &PulseShape::square(), &Default::default())
            .unwrap();
        assert!(sq.warnings.iter().any(|c| c.pair == (4, 5)));
    }

    #[test]
    fn pi_time_and_prediction() {
        let sys = SpectralSystem::square_well();
        let d = design_transfer(&sys, (1, 2), 0.01, &PulseShape::cosine(), &Default::default())
            .unwrap();
        // cosine: c₁ ≈ 1/2, so T_π ≈ π / (a |b|)
        let textbook = PI / (0.01 * 4.0 / 9.0);
        assert!((d.pi_time / textbook - 1.0).abs() < 1e-3);
        assert!(d.pulse.horizon() >= d.pi_time);
        assert!(d.pulse.horizon() - d.pi_time < d.pulse.period());
        assert!(d.predicted_population > 0.999);
        assert!((d.l1_norm - d.control.l1_norm()).abs() < 1e-12);
        assert!((d.efficiency - PI / 4.0).abs() < 1e-3);
    }

    #[test]
    fn no_transfer_on_zero_coupling() {
        let sys = SpectralSystem::square_well();
        assert_eq!(
            design_transfer(&sys, (1, 3), 0.01, &PulseShape::cosine(), &Default::default()),
            Err(Error::NoTransfer { j: 1, k: 3 })
        );
        let broken = SpectralSystem::tabulated(
            "broken",
            vec![-1.0, -3.0, -6.0],
            &[(1, 2, num_complex::Complex64::new(0.0, 0.5))],
            crate::spectral::ControlSet::real_line(),
            None,
        )
        .unwrap();
        let err = ladder_schedule(&broken, 3, 0.01, &PulseShape::cosine(), &Default::default());
        assert_eq!(err.unwrap_err(), Error::BrokenChain { j: 2 });
    }

    #[test]
    fn two_level_ladder_is_one_transfer() {
        let sys = SpectralSystem::planar_rotor();
        let opts = DesignOptions::default();
        let d = design_transfer(&sys, (1, 2), 0.05, &PulseShape::cosine(), &opts).unwrap();
        let l = ladder_schedule(&sys, 2, 0.05, &PulseShape::cosine(), &opts).unwrap();
        assert_eq!(l.legs.len(), 1);
        assert_eq!(l.control, d.control);
        assert_eq!(l.total_l1, d.l1_norm);
        assert!((l.l1_bound - 5.0 * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_scaling_list() {
        let sys = SpectralSystem::planar_rotor();
        let rows = amplitude_scaling_experiment(
            &sys,
            (1, 2),
            0.5,
            &PulseShape::cosine(),
            &[],
            6,
            &Default::default(),
        )
        .unwrap();
        assert!(rows.is_empty());
    }
}
