use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::{PeriodicPulse, PulseShape, Waveform};
use crate::error::{Error, Result};

/// Absolute target per sub-interval, relative to the waveform's peak.
const QUADRATURE_TOL: f64 = 1e-14;

/// `Eff = |∫₀^T u e^{iωτ} dτ| / ∫₀^T |u|` for the pulse's continuous
/// waveform over one period.
pub fn efficiency(pulse: &PeriodicPulse, omega: f64) -> Result<f64> {
    if pulse.amplitude() == 0.0 {
        return Err(Error::ZeroPulse);
    }
    if !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "frequency must be finite, got {omega}"
        )));
    }
    waveform_efficiency(pulse.shape(), omega / pulse.frequency())
}

fn integer_harmonic(r: f64) -> Option<i64> {
    let n = r.round();
    ((r - n).abs() <= 1e-12 * r.abs().max(1.0)).then_some(n as i64)
}

/// Efficiency of `shape` at `harmonic` times its own frequency. Integer
/// harmonics of the cosine and square waveforms are closed-form; everything
/// else goes through [`efficiency_by_quadrature`].
pub fn waveform_efficiency(shape: &PulseShape, harmonic: f64) -> Result<f64> {
    shape.validate()?;
    match (&shape.waveform, integer_harmonic(harmonic)) {
        (Waveform::Cosine, Some(n)) => Ok(if n.abs() == 1 { PI / 4.0 } else { 0.0 }),
        (Waveform::Square, Some(n)) => Ok(if n % 2 != 0 {
            2.0 / (PI * n.abs() as f64)
        } else {
            0.0
        }),
        _ => efficiency_by_quadrature(shape, harmonic),
    }
}

/// Adaptive quadrature of the efficiency, split at the waveform's kinks and
/// zero crossings.
pub fn efficiency_by_quadrature(shape: &PulseShape, harmonic: f64) -> Result<f64> {
    shape.validate()?;
    if !harmonic.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "harmonic must be finite, got {harmonic}"
        )));
    }
    let r = harmonic;
    let mut splits: Vec<f64> = shape
        .waveform
        .kinks()
        .into_iter()
        .map(|k| (k - shape.phase).rem_euclid(TAU))
        .filter(|&t| t > 1e-14 && t < TAU - 1e-14)
        .collect();
    splits.push(0.0);
    splits.push(TAU);
    splits.sort_by(f64::total_cmp);
    splits.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let peak = match &shape.waveform {
        Waveform::Tabulated { samples } => samples.iter().fold(0.0f64, |m, s| m.max(s.abs())),
        _ => 1.0,
    };
    let (mut re, mut im, mut abs) = (0.0, 0.0, 0.0);
    for w in splits.windows(2) {
        let (a, b) = (w[0], w[1]);
        // interior evaluation keeps square-wave jumps off the node set
        let s = |t: f64| shape.value(t.clamp(a, b));
        let tol = QUADRATURE_TOL * peak * (b - a);
        re += quadrature::integrate(|t| s(t) * (r * t).cos(), a, b, tol).integral;
        im += quadrature::integrate(|t| s(t) * (r * t).sin(), a, b, tol).integral;
        abs += quadrature::integrate(|t| s(t).abs(), a, b, tol).integral;
    }
    if !(abs > 0.0) {
        return Err(Error::ZeroPulse);
    }
    Ok(re.hypot(im) / abs)
}

/// `(1/2π) ∫₀^{2π} s(θ) e^{i r θ} dθ` for `s` constant on `values.len()`
/// equal pieces.
pub fn rendered_coefficient(values: &[f64], harmonic: f64) -> Complex64 {
    let m = values.len();
    let h = TAU / m as f64;
    let r = harmonic;
    let mut acc = Complex64::default();
    for (i, &v) in values.iter().enumerate() {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let piece = if r == 0.0 {
            Complex64::new(b - a, 0.0)
        } else {
            (Complex64::from_polar(1.0, r * b) - Complex64::from_polar(1.0, r * a))
                / Complex64::new(0.0, r)
        };
        acc += piece * v;
    }
    acc / TAU
}
