//! Exact propagation of the Galerkin system `ẋ = (A^(N) + u B^(N)) x` under
//! piecewise-constant controls.
//!
//! Every constant piece is advanced by `exp(dt (A + u B)) = exp(-i dt H)`
//! with `H = i (A + u B)` Hermitian, through an eigendecomposition of `H`.
//! Decompositions are cached per control value for the duration of one run,
//! so periodic pulses rendered from a small table of values pay for each
//! value once.

mod control;
mod eigen;
mod taylor;
mod trajectory;

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use control::{PiecewiseConstantControl, Segment};
pub use eigen::DENSE_ORDER_LIMIT;
pub use taylor::GradedTaylor;
pub use trajectory::{Sample, SampleMark, Trajectory, TrajectoryRecorder};

use crate::error::{Error, Result};
use crate::galerkin::Compression;
use eigen::Eigensystem;

/// Tolerance on `‖ψ₀‖ = 1`.
pub const UNIT_NORM_TOL: f64 = 1e-10;

/// Receives states as they are produced.
pub trait Observer {
    fn observe(&mut self, sample: &Sample<'_>);
}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn observe(&mut self, sample: &Sample<'_>) {
        (**self).observe(sample)
    }
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn observe(&mut self, sample: &Sample<'_>) {
        self.0.observe(sample);
        self.1.observe(sample);
    }
}

impl Observer for () {
    fn observe(&mut self, _: &Sample<'_>) {}
}

/// Observer built from a closure.
pub struct FnObserver<F>(pub F);

impl<F: FnMut(&Sample<'_>)> Observer for FnObserver<F> {
    fn observe(&mut self, sample: &Sample<'_>) {
        (self.0)(sample)
    }
}

/// Initial condition: a basis level or explicit coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSpec {
    /// `φ_k`, 1-based.
    Basis(usize),
    Coefficients(Vec<Complex64>),
}

impl StateSpec {
    /// Highest level carrying amplitude (at least 1).
    pub fn support(&self) -> usize {
        match self {
            StateSpec::Basis(k) => (*k).max(1),
            StateSpec::Coefficients(c) => c
                .iter()
                .rposition(|z| z.norm() > 0.0)
                .map_or(1, |i| i + 1),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            StateSpec::Basis(_) => 1.0,
            StateSpec::Coefficients(c) => c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// Coefficient vector of length `order`.
    pub fn to_vector(&self, order: usize) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::default(); order];
        match self {
            StateSpec::Basis(k) => {
                if *k == 0 || *k > order {
                    return Err(Error::LevelOutOfRange {
                        index: *k,
                        available: order,
                    });
                }
                out[k - 1] = Complex64::new(1.0, 0.0);
            }
            StateSpec::Coefficients(c) => {
                if self.support() > order {
                    return Err(Error::DimensionMismatch {
                        expected: order,
                        got: c.len(),
                    });
                }
                for (o, z) in out.iter_mut().zip(c) {
                    *o = *z;
                }
            }
        }
        Ok(out)
    }
}

fn check_unit(psi0: &[Complex64], order: usize) -> Result<()> {
    if psi0.len() != order {
        return Err(Error::DimensionMismatch {
            expected: order,
            got: psi0.len(),
        });
    }
    let norm = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
        return Err(Error::NonUnitState { norm });
    }
    Ok(())
}

/// Propagation engine bound to one compression, with a per-run cache of
/// eigendecompositions keyed by control value.
pub struct Propagator<'c, 'a> {
    comp: &'c Compression<'a>,
    cache: HashMap<u64, Eigensystem>,
}

impl<'c, 'a> Propagator<'c, 'a> {
    pub fn new(comp: &'c Compression<'a>) -> Self {
        Propagator {
            comp,
            cache: HashMap::new(),
        }
    }

    fn eigensystem(&mut self, u: f64) -> &Eigensystem {
        let comp = self.comp;
        self.cache
            .entry(u.to_bits())
            .or_insert_with(|| Eigensystem::new(comp, u))
    }

    fn check_control(&self, control: &PiecewiseConstantControl) -> Result<()> {
        control.check_within(self.comp.system().control_set())
    }

    /// `exp(dt (A^(N) + u B^(N)))` for any real `dt`.
    pub fn segment_exponential(&mut self, u: f64, dt: f64) -> Result<DMatrix<Complex64>> {
        if !(u.is_finite() && dt.is_finite()) {
            return Err(Error::InvalidControl("non-finite segment".into()));
        }
        Ok(self.eigensystem(u).exponential(dt))
    }

    /// Product of the segment exponentials, latest segment leftmost.
    pub fn propagator_matrix(
        &mut self,
        control: &PiecewiseConstantControl,
    ) -> Result<DMatrix<Complex64>> {
        self.check_control(control)?;
        let n = self.comp.order();
        let mut total = DMatrix::<Complex64>::identity(n, n);
        for seg in control.segments() {
            total = self.eigensystem(seg.value).exponential(seg.duration()) * total;
        }
        Ok(total)
    }

    /// Propagates `psi0` and reports to `observer` at `t = 0`, at every
    /// breakpoint, and every `sample_dt` inside each segment. Pass
    /// `f64::INFINITY` for breakpoints only. Returns the terminal state.
    pub fn run<O: Observer + ?Sized>(
        &mut self,
        control: &PiecewiseConstantControl,
        psi0: &[Complex64],
        sample_dt: f64,
        observer: &mut O,
    ) -> Result<Vec<Complex64>> {
        let n = self.comp.order();
        check_unit(psi0, n)?;
        if !(sample_dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample_dt must be positive, got {sample_dt}"
            )));
        }
        self.check_control(control)?;

        let mut x = psi0.to_vec();
        let mut y = vec![Complex64::default(); n];
        let mut tmp = vec![Complex64::default(); n];
        let mut index = 0;
        let mut cumulative = 0.0;
        let segments = control.len();

        observer.observe(&Sample {
            index,
            time: 0.0,
            state: &x,
            within: None,
            starts: (segments > 0).then(|| control.segment(0)),
            cumulative_l1: 0.0,
        });

        for seg in control.segments() {
            let dt = seg.duration();
            let eig = self.eigensystem(seg.value);
            eig.to_eigenbasis(&x, &mut y);
            if sample_dt < dt {
                let mut k = 1usize;
                loop {
                    let tau = k as f64 * sample_dt;
                    if tau >= dt * (1.0 - 1e-12) {
                        break;
                    }
                    eig.from_eigenbasis(&y, tau, &mut tmp);
                    index += 1;
                    observer.observe(&Sample {
                        index,
                        time: seg.start + tau,
                        state: &tmp,
                        within: Some(seg),
                        starts: None,
                        cumulative_l1: cumulative + seg.value.abs() * tau,
                    });
                    k += 1;
                }
            }
            eig.from_eigenbasis(&y, dt, &mut x);
            cumulative += seg.value.abs() * dt;
            index += 1;
            observer.observe(&Sample {
                index,
                time: seg.end,
                state: &x,
                within: Some(seg),
                starts: (seg.index + 1 < segments).then(|| control.segment(seg.index + 1)),
                cumulative_l1: cumulative,
            });
        }
        Ok(x)
    }
}

/// Propagates and records a [`Trajectory`].
pub fn propagate(
    comp: &Compression<'_>,
    control: &PiecewiseConstantControl,
    psi0: &[Complex64],
    sample_dt: f64,
) -> Result<Trajectory> {
    let mut recorder = TrajectoryRecorder::new(comp.system().name(), comp.order(), control);
    Propagator::new(comp).run(control, psi0, sample_dt, &mut recorder)?;
    Ok(recorder.finish())
}

/// Propagates and streams samples to `observer` without recording them.
pub fn propagate_observed<O: Observer + ?Sized>(
    comp: &Compression<'_>,
    control: &PiecewiseConstantControl,
    psi0: &[Complex64],
    sample_dt: f64,
    observer: &mut O,
) -> Result<Vec<Complex64>> {
    Propagator::new(comp).run(control, psi0, sample_dt, observer)
}

/// State at the control's horizon.
pub fn terminal_state(
    comp: &Compression<'_>,
    control: &PiecewiseConstantControl,
    psi0: &[Complex64],
) -> Result<Vec<Complex64>> {
    Propagator::new(comp).run(control, psi0, f64::INFINITY, &mut ())
}

/// How terminal states are computed in convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Eigendecomposition of each segment's Hermitian generator.
    #[default]
    Spectral,
    /// [`GradedTaylor`], for differences below machine precision.
    GradedTaylor,
}

/// Zero-order hold of `f` on `[0, horizon]`: `ceil(horizon/dt)` equal steps,
/// each holding the value at its midpoint.
pub fn sample_midpoints<F: Fn(f64) -> f64>(
    f: F,
    horizon: f64,
    dt: f64,
) -> Result<PiecewiseConstantControl> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {dt}"
        )));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be non-negative, got {horizon}"
        )));
    }
    if horizon == 0.0 {
        return Ok(PiecewiseConstantControl::empty());
    }
    let steps = (horizon / dt).ceil().max(1.0) as usize;
    let h = horizon / steps as f64;
    let mut breakpoints: Vec<f64> = (0..steps).map(|i| i as f64 * h).collect();
    breakpoints.push(horizon);
    let values = (0..steps).map(|i| f((i as f64 + 0.5) * h)).collect();
    PiecewiseConstantControl::new(breakpoints, values)
}

/// Samples `f` by [`sample_midpoints`] and propagates; the trajectory's
/// control carries the sampled `L¹` norm.
pub fn propagate_sampled<F: Fn(f64) -> f64>(
    comp: &Compression<'_>,
    f: F,
    horizon: f64,
    dt: f64,
    psi0: &[Complex64],
) -> Result<Trajectory> {
    let control = sample_midpoints(f, horizon, dt)?;
    propagate(comp, &control, psi0, f64::INFINITY)
}

/// `X^u_(N)(T, 0)`.
pub fn propagator_matrix(
    comp: &Compression<'_>,
    control: &PiecewiseConstantControl,
) -> Result<DMatrix<Complex64>> {
    Propagator::new(comp).propagator_matrix(control)
}
