use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{DiagnosticReport, Guard, Verdict};
use crate::error::{Error, Result};
use crate::propagator::{Observer, Sample, Trajectory};
use crate::spectral::{coupling_norm_column, SpectralSystem};

/// Top-level population above which infinite-dimensional bounds are not
/// checked.
pub const DEFAULT_EDGE_GUARD: f64 = 1e-6;
/// Relative.
pub const DEFAULT_NORM_GROWTH_TOL: f64 = 1e-12;
/// Absolute.
pub const DEFAULT_L1_TOL: f64 = 1e-6;
/// Relative to `max(1, bound)`.
pub const DEFAULT_ENERGY_TOL: f64 = 1e-12;
/// Largest change of `|x_n|` tolerated on a level with no coupling.
pub const ZERO_COLUMN_DRIFT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckOptions {
    pub guard_edge_population: f64,
    /// Overrides the check's default tolerance.
    pub tolerance: Option<f64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            guard_edge_population: DEFAULT_EDGE_GUARD,
            tolerance: None,
        }
    }
}

impl CheckOptions {
    fn tolerance_or(&self, default: f64) -> Result<f64> {
        let tol = self.tolerance.unwrap_or(default);
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid tolerance {tol}")));
        }
        if !(self.guard_edge_population >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid edge guard {}",
                self.guard_edge_population
            )));
        }
        Ok(tol)
    }
}

/// Worst sample seen so far, ranked by `excess`.
#[derive(Debug, Clone, Copy)]
struct Worst {
    excess: f64,
    time: f64,
    measured: f64,
    bound: f64,
    tolerance: f64,
}

impl Worst {
    fn update(slot: &mut Option<Worst>, candidate: Worst) {
        if slot.is_none_or(|w| candidate.excess > w.excess) {
            *slot = Some(candidate);
        }
    }
}

fn weighted_norm(weights: &[f64], x: &[num_complex::Complex64]) -> f64 {
    weights
        .iter()
        .zip(x)
        .map(|(w, z)| w * w * z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn finish_report(
    check: &str,
    system: &str,
    mut parameters: BTreeMap<String, serde_json::Value>,
    worst: Option<Worst>,
    pass: impl Fn(&Worst) -> bool,
    guard: Option<Guard>,
    samples: usize,
) -> DiagnosticReport {
    parameters.insert("samples".into(), json!(samples));
    if let Some(w) = &worst {
        parameters.insert("worst_time".into(), json!(w.time));
    }
    let verdict = match (&guard, &worst) {
        (Some(g), _) if g.tripped => Verdict::Skipped {
            reason: format!(
                "truncation-edge population {:.3e} exceeds guard {:.3e}",
                g.edge_population, g.threshold
            ),
        },
        (_, None) => Verdict::Skipped {
            reason: "no samples".into(),
        },
        (_, Some(w)) if pass(w) => Verdict::Pass,
        _ => Verdict::Fail,
    };
    DiagnosticReport {
        check: check.into(),
        system: system.into(),
        parameters,
        measured: worst.map(|w| w.measured),
        bound: worst.map(|w| w.bound),
        tolerance: worst.map(|w| w.tolerance),
        verdict,
        guard,
    }
}

fn edge_population(sample: &Sample<'_>) -> f64 {
    sample.state.last().map_or(0.0, |z| z.norm_sqr())
}

/// `‖|A|^{k/2} x(t)‖ ≤ e^{c_k ∫₀^t |u|} ‖|A|^{k/2} x(0)‖` at every sample.
pub struct NormGrowthCheck {
    system: String,
    k: f64,
    c_k: f64,
    tol: f64,
    guard: f64,
    weights: Vec<f64>,
    initial: Option<f64>,
    worst: Option<Worst>,
    edge: f64,
    samples: usize,
}

impl NormGrowthCheck {
    pub fn new(
        sys: &SpectralSystem,
        order: usize,
        k: f64,
        c_k: f64,
        options: &CheckOptions,
    ) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite() && c_k >= 0.0 && c_k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "norm growth needs k ≥ 0 and c_k ≥ 0, got k = {k}, c_k = {c_k}"
            )));
        }
        sys.check_level(order)?;
        Ok(NormGrowthCheck {
            system: sys.name().into(),
            k,
            c_k,
            tol: options.tolerance_or(DEFAULT_NORM_GROWTH_TOL)?,
            guard: options.guard_edge_population,
            weights: (1..=order)
                .map(|n| sys.eigenvalue(n).abs().powf(k / 2.0))
                .collect(),
            initial: None,
            worst: None,
            edge: 0.0,
            samples: 0,
        })
    }

    pub fn report(&self) -> DiagnosticReport {
        let params = BTreeMap::from([
            ("k".to_string(), json!(self.k)),
            ("c_k".to_string(), json!(self.c_k)),
            ("order".to_string(), json!(self.weights.len())),
            ("relative_tolerance".to_string(), json!(self.tol)),
        ]);
        let tol = self.tol;
        finish_report(
            "norm-growth",
            &self.system,
            params,
            self.worst,
            |w| w.excess <= tol,
            Some(Guard {
                edge_population: self.edge,
                threshold: self.guard,
                tripped: self.edge > self.guard,
            }),
            self.samples,
        )
    }
}

impl Observer for NormGrowthCheck {
    fn observe(&mut self, sample: &Sample<'_>) {
        let lhs = weighted_norm(&self.weights, sample.state);
        let initial = *self.initial.get_or_insert(lhs);
        let rhs = (self.c_k * sample.cumulative_l1).exp() * initial;
        let scale = if rhs > 0.0 { rhs } else { 1.0 };
        Worst::update(
            &mut self.worst,
            Worst {
                excess: (lhs - rhs) / scale,
                time: sample.time,
                measured: lhs,
                bound: rhs,
                tolerance: self.tol * scale,
            },
        );
        self.edge = self.edge.max(edge_population(sample));
        self.samples += 1;
    }
}

/// `sup_n ||x_n(0)| - |x_n(t)|| / ‖B φ_n‖_(N) ≤ ∫₀^t |u|` at every sample.
///
/// With the truncated column norm the inequality holds exactly for the
/// Galerkin system, so no edge guard applies.
pub struct L1LowerBoundCheck {
    system: String,
    tol: f64,
    columns: Vec<f64>,
    initial: Option<Vec<f64>>,
    worst: Option<Worst>,
    samples: usize,
}

impl L1LowerBoundCheck {
    pub fn new(sys: &SpectralSystem, order: usize, options: &CheckOptions) -> Result<Self> {
        let columns = (1..=order)
            .map(|n| coupling_norm_column(sys, n, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(L1LowerBoundCheck {
            system: sys.name().into(),
            tol: options.tolerance_or(DEFAULT_L1_TOL)?,
            columns,
            initial: None,
            worst: None,
            samples: 0,
        })
    }

    pub fn report(&self) -> DiagnosticReport {
        let params = BTreeMap::from([("order".to_string(), json!(self.columns.len()))]);
        let tol = self.tol;
        finish_report(
            "l1-lower-bound",
            &self.system,
            params,
            self.worst,
            |w| w.measured <= w.bound + tol,
            None,
            self.samples,
        )
    }
}

impl Observer for L1LowerBoundCheck {
    fn observe(&mut self, sample: &Sample<'_>) {
        let initial = self
            .initial
            .get_or_insert_with(|| sample.state.iter().map(|z| z.norm()).collect());
        let mut sup: f64 = 0.0;
        for ((z, a), col) in sample.state.iter().zip(initial.iter()).zip(&self.columns) {
            let change = (a - z.norm()).abs();
            let ratio = if *col > 0.0 {
                change / col
            } else if change > ZERO_COLUMN_DRIFT {
                f64::INFINITY
            } else {
                0.0
            };
            sup = sup.max(ratio);
        }
        Worst::update(
            &mut self.worst,
            Worst {
                excess: sup - sample.cumulative_l1,
                time: sample.time,
                measured: sup,
                bound: sample.cumulative_l1,
                tolerance: self.tol,
            },
        );
        self.samples += 1;
    }
}

/// `‖A x(t)‖ ≤ ‖A x(t_s)‖ + 2 |u_s| ‖B‖` for every sample inside segment `s`
/// starting at `t_s`.
pub struct EnergyVariationCheck {
    system: String,
    tol: f64,
    guard: f64,
    opnorm: f64,
    energies: Vec<f64>,
    segment_start: f64,
    worst: Option<Worst>,
    edge: f64,
    samples: usize,
}

impl EnergyVariationCheck {
    /// Refuses systems without a declared operator norm of `B`.
    pub fn new(sys: &SpectralSystem, order: usize, options: &CheckOptions) -> Result<Self> {
        let opnorm = sys.coupling_opnorm().ok_or_else(|| {
            Error::Refused(format!(
                "B unbounded: no operator norm is declared for {}",
                sys.name()
            ))
        })?;
        sys.check_level(order)?;
        Ok(EnergyVariationCheck {
            system: sys.name().into(),
            tol: options.tolerance_or(DEFAULT_ENERGY_TOL)?,
            guard: options.guard_edge_population,
            opnorm,
            energies: (1..=order).map(|n| sys.eigenvalue(n)).collect(),
            segment_start: 0.0,
            worst: None,
            edge: 0.0,
            samples: 0,
        })
    }

    pub fn report(&self) -> DiagnosticReport {
        let params = BTreeMap::from([
            ("order".to_string(), json!(self.energies.len())),
            ("coupling_opnorm".to_string(), json!(self.opnorm)),
            ("relative_tolerance".to_string(), json!(self.tol)),
        ]);
        let tol = self.tol;
        finish_report(
            "energy-variation",
            &self.system,
            params,
            self.worst,
            |w| w.excess <= tol,
            Some(Guard {
                edge_population: self.edge,
                threshold: self.guard,
                tripped: self.edge > self.guard,
            }),
            self.samples,
        )
    }
}

impl Observer for EnergyVariationCheck {
    fn observe(&mut self, sample: &Sample<'_>) {
        let energy = weighted_norm(&self.energies, sample.state);
        if let Some(seg) = sample.within {
            let bound = self.segment_start + 2.0 * seg.value.abs() * self.opnorm;
            let scale = bound.max(1.0);
            Worst::update(
                &mut self.worst,
                Worst {
                    excess: (energy - bound) / scale,
                    time: sample.time,
                    measured: energy,
                    bound,
                    tolerance: self.tol * scale,
                },
            );
        }
        if sample.within.is_none() || sample.starts.is_some() {
            self.segment_start = energy;
        }
        self.edge = self.edge.max(edge_population(sample));
        self.samples += 1;
    }
}

pub fn check_norm_growth(
    traj: &Trajectory,
    sys: &SpectralSystem,
    k: f64,
    c_k: f64,
    options: &CheckOptions,
) -> Result<DiagnosticReport> {
    let mut check = NormGrowthCheck::new(sys, traj.order(), k, c_k, options)?;
    traj.replay(&mut check);
    Ok(check.report())
}

pub fn check_l1_lower_bound(
    traj: &Trajectory,
    sys: &SpectralSystem,
    options: &CheckOptions,
) -> Result<DiagnosticReport> {
    let mut check = L1LowerBoundCheck::new(sys, traj.order(), options)?;
    traj.replay(&mut check);
    Ok(check.report())
}

/// `options.tolerance` replaces the default relative tolerance. The operator
/// norm comes from the system's declared metadata.
pub fn check_energy_variation(
    traj: &Trajectory,
    sys: &SpectralSystem,
    options: &CheckOptions,
) -> Result<DiagnosticReport> {
    let mut check = EnergyVariationCheck::new(sys, traj.order(), options)?;
    traj.replay(&mut check);
    Ok(check.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::compress;
    use crate::propagator::{propagate, PiecewiseConstantControl, StateSpec};

    fn run(sys: &SpectralSystem, n: usize, u: &PiecewiseConstantControl) -> Trajectory {
        let comp = compress(sys, n).unwrap();
        propagate(&comp, u, &StateSpec::Basis(1).to_vector(n).unwrap(), 0.05).unwrap()
    }

    #[test]
    fn zero_control_is_tight() {
        for sys in [SpectralSystem::planar_rotor(), SpectralSystem::harmonic()] {
            let traj = run(&sys, 8, &PiecewiseConstantControl::constant(0.0, 2.0).unwrap());
            let opts = CheckOptions::default();
            for k in [1.0, 2.0] {
                let c = sys.known_coupling_bound(k).unwrap();
                let r = check_norm_growth(&traj, &sys, k, c, &opts).unwrap();
                assert!(r.verdict.is_pass(), "{r:?}");
                assert!((r.measured.unwrap() - r.bound.unwrap()).abs() < 1e-12);
            }
            let r = check_l1_lower_bound(&traj, &sys, &opts).unwrap();
            assert!(r.verdict.is_pass());
            assert!(r.measured.unwrap() < 1e-12);
        }
    }

    #[test]
    fn energy_check_refuses_unbounded() {
        let sys = SpectralSystem::harmonic();
        let traj = run(&sys, 4, &PiecewiseConstantControl::constant(1.0, 1.0).unwrap());
        let err = check_energy_variation(&traj, &sys, &CheckOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Refused(ref m) if m.contains("B unbounded")));
    }

    #[test]
    fn energy_check_on_rotor() {
        let sys = SpectralSystem::planar_rotor();
        let opts = CheckOptions::default();
        let still = run(&sys, 10, &PiecewiseConstantControl::constant(0.0, 1.0).unwrap());
        let r = check_energy_variation(&still, &sys, &opts).unwrap();
        assert!(r.verdict.is_pass(), "{r:?}");
        let kick = run(&sys, 10, &PiecewiseConstantControl::constant(1.0, 1.0).unwrap());
        let r = check_energy_variation(&kick, &sys, &opts).unwrap();
        assert!(r.verdict.is_pass(), "{r:?}");
        assert!(r.guard.is_some_and(|g| !g.tripped));
    }

    #[test]
    fn guard_trips_on_small_truncation() {
        let sys = SpectralSystem::planar_rotor();
        let traj = run(&sys, 3, &PiecewiseConstantControl::constant(2.0, 3.0).unwrap());
        let r = check_norm_growth(&traj, &sys, 1.0, 1.5, &CheckOptions::default()).unwrap();
        assert!(matches!(r.verdict, Verdict::Skipped { .. }));
    }

    #[test]
    fn violated_bound_fails() {
        let sys = SpectralSystem::planar_rotor();
        let traj = run(&sys, 12, &PiecewiseConstantControl::constant(1.0, 1.0).unwrap());
        // c_k = 0 forbids any growth, which the kick produces
        let r = check_norm_growth(&traj, &sys, 2.0, 0.0, &CheckOptions::default()).unwrap();
        assert!(r.verdict.is_fail(), "{r:?}");
        assert!(r.margin().unwrap() < 0.0);
    }

    #[test]
    fn reports_are_deterministic() {
        let sys = SpectralSystem::planar_rotor();
        let u = PiecewiseConstantControl::new(vec![0.0, 0.5, 1.0], vec![0.7, -0.3]).unwrap();
        let a = check_l1_lower_bound(&run(&sys, 6, &u), &sys, &Default::default()).unwrap();
        let b = check_l1_lower_bound(&run(&sys, 6, &u), &sys, &Default::default()).unwrap();
        assert_eq!(a.to_json_line(), b.to_json_line());
        let back: DiagnosticReport = serde_json::from_str(&a.to_json_line()).unwrap();
        assert_eq!(back, a);
    }
}
