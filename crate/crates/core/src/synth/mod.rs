//! Resonant periodic controls: waveforms, the efficiency functional, π-pulse
//! design and multi-transition schedules.

mod design;
mod efficiency;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

pub use design::{
    amplitude_scaling_experiment, design_transfer, ladder_schedule, resonance_collisions,
    Collision, CollisionWarning, DesignOptions, LadderSchedule, ScalingRow, TransferDesign,
    DEFAULT_COLLISION_TOL, DEFAULT_STEPS_PER_PERIOD, MAX_SCAN_DEPTH,
};
pub use efficiency::{
    efficiency, efficiency_by_quadrature, rendered_coefficient, waveform_efficiency,
};

use crate::error::{Error, Result};
use crate::propagator::PiecewiseConstantControl;
use crate::spectral::SpectralSystem;

/// A `2π`-periodic waveform `s(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Waveform {
    /// `cos θ`.
    Cosine,
    /// `sign(cos θ)`.
    Square,
    /// Periodic piecewise-linear interpolation of `samples[i]` at
    /// `θ_i = 2π i / len`.
    Tabulated { samples: Vec<f64> },
}

impl Waveform {
    pub fn validate(&self) -> Result<()> {
        if let Waveform::Tabulated { samples } = self {
            if samples.len() < 2 {
                return Err(Error::InvalidParameter(
                    "tabulated waveform needs at least 2 samples".into(),
                ));
            }
            if samples.iter().any(|s| !s.is_finite()) {
                return Err(Error::InvalidParameter(
                    "tabulated waveform has non-finite samples".into(),
                ));
            }
            if samples.iter().all(|&s| s == 0.0) {
                return Err(Error::ZeroPulse);
            }
        }
        Ok(())
    }

    pub fn value(&self, theta: f64) -> f64 {
        match self {
            Waveform::Cosine => theta.cos(),
            Waveform::Square => {
                let c = theta.cos();
                if c > 0.0 {
                    1.0
                } else if c < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Waveform::Tabulated { samples } => {
                let m = samples.len();
                let x = theta.rem_euclid(TAU) / TAU * m as f64;
                let i = (x.floor() as usize).min(m - 1);
                let frac = x - i as f64;
                let a = samples[i];
                let b = samples[(i + 1) % m];
                a + (b - a) * frac
            }
        }
    }

    /// Points in `[0, 2π)` where `s` or `|s|` fails to be smooth.
    pub(crate) fn kinks(&self) -> Vec<f64> {
        match self {
            Waveform::Cosine | Waveform::Square => vec![PI / 2.0, 3.0 * PI / 2.0],
            Waveform::Tabulated { samples } => {
                let m = samples.len();
                let h = TAU / m as f64;
                let mut out = Vec::with_capacity(2 * m);
                for i in 0..m {
                    out.push(i as f64 * h);
                    let (a, b) = (samples[i], samples[(i + 1) % m]);
                    if a * b < 0.0 {
                        out.push(i as f64 * h + a / (a - b) * h);
                    }
                }
                out
            }
        }
    }
}

/// Waveform evaluated at `θ = ωt + phase`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseShape {
    pub waveform: Waveform,
    #[serde(default)]
    pub phase: f64,
}

impl PulseShape {
    pub fn cosine() -> Self {
        PulseShape {
            waveform: Waveform::Cosine,
            phase: 0.0,
        }
    }

    pub fn square() -> Self {
        PulseShape {
            waveform: Waveform::Square,
            phase: 0.0,
        }
    }

    pub fn tabulated(samples: Vec<f64>) -> Self {
        PulseShape {
            waveform: Waveform::Tabulated { samples },
            phase: 0.0,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phase.is_finite() {
            return Err(Error::InvalidParameter("phase must be finite".into()));
        }
        self.waveform.validate()
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.waveform.value(theta + self.phase)
    }
}

/// `u(t) = amplitude · s(2π t / period + phase)` repeated `repetitions`
/// times, the period being that of the transition it drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPulse")]
pub struct PeriodicPulse {
    shape: PulseShape,
    transition: (usize, usize),
    period: f64,
    amplitude: f64,
    repetitions: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    shape: PulseShape,
    transition: (usize, usize),
    period: f64,
    amplitude: f64,
    repetitions: usize,
}

impl TryFrom<RawPulse> for PeriodicPulse {
    type Error = Error;

    fn try_from(raw: RawPulse) -> Result<Self> {
        if !(raw.period > 0.0 && raw.period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "period must be positive, got {}",
                raw.period
            )));
        }
        PeriodicPulse::with_period(
            raw.shape,
            raw.transition,
            raw.period,
            raw.amplitude,
            raw.repetitions,
        )
    }
}

impl PeriodicPulse {
    /// Pulse resonant with `transition = (j, k)` of `sys`.
    pub fn new(
        sys: &SpectralSystem,
        transition: (usize, usize),
        shape: PulseShape,
        amplitude: f64,
        repetitions: usize,
    ) -> Result<Self> {
        let (j, k) = transition;
        sys.check_level(j)?;
        sys.check_level(k)?;
        let gap = sys.transition_frequency(j, k);
        if !(gap > 0.0) {
            return Err(Error::DegenerateLevels { j, k });
        }
        Self::with_period(shape, transition, TAU / gap, amplitude, repetitions)
    }

    fn with_period(
        shape: PulseShape,
        transition: (usize, usize),
        period: f64,
        amplitude: f64,
        repetitions: usize,
    ) -> Result<Self> {
        shape.validate()?;
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be finite and non-negative, got {amplitude}"
            )));
        }
        if repetitions == 0 {
            return Err(Error::InvalidParameter(
                "repetitions must be positive".into(),
            ));
        }
        Ok(PeriodicPulse {
            shape,
            transition,
            period,
            amplitude,
            repetitions,
        })
    }

    pub fn shape(&self) -> &PulseShape {
        &self.shape
    }

    pub fn transition(&self) -> (usize, usize) {
        self.transition
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `2π / period`.
    pub fn frequency(&self) -> f64 {
        TAU / self.period
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn horizon(&self) -> f64 {
        self.period * self.repetitions as f64
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        Self::with_period(
            self.shape.clone(),
            self.transition,
            self.period,
            amplitude,
            self.repetitions,
        )
    }

    pub fn with_repetitions(&self, repetitions: usize) -> Result<Self> {
        Self::with_period(
            self.shape.clone(),
            self.transition,
            self.period,
            self.amplitude,
            repetitions,
        )
    }

    /// Continuous waveform value at time `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        self.amplitude * self.shape.value(TAU * t / self.period)
    }

    /// One period held at the midpoints of `steps` equal pieces.
    pub fn period_values(&self, steps: usize) -> Vec<f64> {
        (0..steps)
            .map(|i| self.amplitude * self.shape.value(TAU * (i as f64 + 0.5) / steps as f64))
            .collect()
    }

    /// Piecewise-constant rendering over all repetitions.
    pub fn render(&self, steps_per_period: usize) -> Result<PiecewiseConstantControl> {
        self.render_until(self.horizon(), steps_per_period)
    }

    /// Rendering truncated (or extended) to `horizon`; the last piece may be
    /// partial.
    pub fn render_until(
        &self,
        horizon: f64,
        steps_per_period: usize,
    ) -> Result<PiecewiseConstantControl> {
        if steps_per_period < 2 {
            return Err(Error::InvalidParameter(
                "at least 2 steps per period are needed".into(),
            ));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be finite and non-negative, got {horizon}"
            )));
        }
        let table = self.period_values(steps_per_period);
        let h = self.period / steps_per_period as f64;
        let full = (horizon / h * (1.0 + 1e-14)).floor() as usize;
        let mut breakpoints: Vec<f64> = (0..=full).map(|i| i as f64 * h).collect();
        let mut values: Vec<f64> = (0..full).map(|i| table[i % steps_per_period]).collect();
        let last = *breakpoints.last().expect("at least t = 0");
        if horizon - last > 1e-9 * h {
            breakpoints.push(horizon);
            values.push(table[full % steps_per_period]);
        } else if full > 0 {
            *breakpoints.last_mut().expect("nonempty") = horizon;
        }
        PiecewiseConstantControl::new(breakpoints, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_matches_gap() {
        let sys = SpectralSystem::planar_rotor();
        let p = PeriodicPulse::new(&sys, (1, 2), PulseShape::cosine(), 0.1, 3).unwrap();
        assert!((p.period() * 3.0 - TAU).abs() < 1e-12);
        assert!((p.frequency() - 3.0).abs() < 1e-12);
        assert!(PeriodicPulse::new(&sys, (2, 2), PulseShape::cosine(), 0.1, 1).is_err());
        assert!(PeriodicPulse::new(&sys, (1, 2), PulseShape::cosine(), -0.1, 1).is_err());
        assert!(PeriodicPulse::new(&sys, (1, 2), PulseShape::cosine(), 0.1, 0).is_err());
    }

    #[test]
    fn rendering_is_periodic() {
        let sys = SpectralSystem::square_well();
        let p = PeriodicPulse::new(&sys, (1, 2), PulseShape::cosine().with_phase(0.3), 0.5, 4)
            .unwrap();
        let u = p.render(16).unwrap();
        assert_eq!(u.len(), 64);
        assert!((u.horizon() - p.horizon()).abs() < 1e-12);
        for i in 0..48 {
            assert_eq!(u.values()[i], u.values()[i + 16]);
        }
        let h = p.period() / 16.0;
        assert!((u.values()[3] - p.value_at(3.5 * h)).abs() < 1e-12);
    }

    #[test]
    fn partial_rendering() {
        let sys = SpectralSystem::planar_rotor();
        let p = PeriodicPulse::new(&sys, (1, 2), PulseShape::square(), 1.0, 1).unwrap();
        let u = p.render_until(1.25 * p.period(), 8).unwrap();
        assert_eq!(u.len(), 10);
        assert!((u.horizon() - 1.25 * p.period()).abs() < 1e-12);
        let v = p.render_until(1.3 * p.period(), 8).unwrap();
        assert_eq!(v.len(), 11);
        assert_eq!(v.values()[10], v.values()[2]);
        assert!(p.render_until(0.0, 8).unwrap().is_empty());
    }

    #[test]
    fn tabulated_interpolation() {
        let w = Waveform::Tabulated {
            samples: vec![0.0, 1.0, 0.0, -1.0],
        };
        assert!((w.value(PI / 4.0) - 0.5).abs() < 1e-15);
        assert!((w.value(TAU + PI / 2.0) - 1.0).abs() < 1e-15);
        assert!((w.value(-PI / 4.0) + 0.5).abs() < 1e-15);
        let kinks = w.kinks();
        assert_eq!(kinks.len(), 4);
        let z = Waveform::Tabulated {
            samples: vec![1.0, -1.0],
        };
        assert_eq!(z.kinks().len(), 4);
        assert!(Waveform::Tabulated { samples: vec![0.0; 4] }.validate().is_err());
        assert!(Waveform::Tabulated { samples: vec![1.0] }.validate().is_err());
    }

    #[test]
    fn pulse_serde_roundtrip() {
        let sys = SpectralSystem::harmonic();
        let p = PeriodicPulse::new(&sys, (1, 2), PulseShape::tabulated(vec![1.0, -2.0]), 0.2, 5)
            .unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let q: PeriodicPulse = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let bad = s.replace("\"repetitions\":5", "\"repetitions\":0");
        assert!(serde_json::from_str::<PeriodicPulse>(&bad).is_err());
    }
}
