use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::control::{PiecewiseConstantControl, Segment};
use super::Observer;
use crate::error::{Error, Result};

/// Where a sample sits relative to the control's breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMark {
    /// Segment the state evolved through since the previous breakpoint.
    pub within: Option<usize>,
    /// Segment starting at this sample, when the sample is a breakpoint.
    pub starts: Option<usize>,
}

/// A state delivered to an [`Observer`] during propagation.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub index: usize,
    pub time: f64,
    pub state: &'a [Complex64],
    pub within: Option<Segment>,
    pub starts: Option<Segment>,
    /// `∫_0^t |u|`.
    pub cumulative_l1: f64,
}

impl Sample<'_> {
    pub fn population(&self, level: usize) -> f64 {
        self.state[level - 1].norm_sqr()
    }

    pub fn is_breakpoint(&self) -> bool {
        self.starts.is_some() || self.within.is_none_or(|s| self.time == s.end)
    }
}

/// Sampled Galerkin trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory")]
pub struct Trajectory {
    system: String,
    order: usize,
    control: PiecewiseConstantControl,
    times: Vec<f64>,
    states: Vec<Vec<Complex64>>,
    cumulative_l1: Vec<f64>,
    marks: Vec<SampleMark>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectory {
    system: String,
    order: usize,
    control: PiecewiseConstantControl,
    times: Vec<f64>,
    states: Vec<Vec<Complex64>>,
    cumulative_l1: Vec<f64>,
    marks: Vec<SampleMark>,
}

impl TryFrom<RawTrajectory> for Trajectory {
    type Error = Error;

    fn try_from(raw: RawTrajectory) -> Result<Self> {
        let n = raw.times.len();
        if n == 0 || raw.times[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "trajectory must start at t = 0".into(),
            ));
        }
        if raw.states.len() != n || raw.cumulative_l1.len() != n || raw.marks.len() != n {
            return Err(Error::InvalidParameter(
                "trajectory columns have different lengths".into(),
            ));
        }
        if let Some(bad) = raw.states.iter().find(|s| s.len() != raw.order) {
            return Err(Error::DimensionMismatch {
                expected: raw.order,
                got: bad.len(),
            });
        }
        let segments = raw.control.len();
        let in_range = |s: Option<usize>| s.is_none_or(|s| s < segments);
        if !raw.marks.iter().all(|m| in_range(m.within) && in_range(m.starts)) {
            return Err(Error::InvalidParameter(
                "sample mark refers to a missing segment".into(),
            ));
        }
        Ok(Trajectory {
            system: raw.system,
            order: raw.order,
            control: raw.control,
            times: raw.times,
            states: raw.states,
            cumulative_l1: raw.cumulative_l1,
            marks: raw.marks,
        })
    }
}

impl Trajectory {
    pub fn system(&self) -> &str {
        &self.system
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn control(&self) -> &PiecewiseConstantControl {
        &self.control
    }

    pub fn control_l1(&self) -> f64 {
        self.control.l1_norm()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<Complex64>] {
        &self.states
    }

    pub fn marks(&self) -> &[SampleMark] {
        &self.marks
    }

    pub fn initial_state(&self) -> &[Complex64] {
        &self.states[0]
    }

    pub fn final_state(&self) -> &[Complex64] {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// `|⟨φ_level, x(T)⟩|²`.
    pub fn final_population(&self, level: usize) -> f64 {
        self.final_state()[level - 1].norm_sqr()
    }

    pub fn sample(&self, index: usize) -> Sample<'_> {
        let mark = self.marks[index];
        Sample {
            index,
            time: self.times[index],
            state: &self.states[index],
            within: mark.within.map(|s| self.control.segment(s)),
            starts: mark.starts.map(|s| self.control.segment(s)),
            cumulative_l1: self.cumulative_l1[index],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> + '_ {
        (0..self.len()).map(|i| self.sample(i))
    }

    /// Feeds every recorded sample to `observer`.
    pub fn replay<O: Observer + ?Sized>(&self, observer: &mut O) {
        for sample in self.samples() {
            observer.observe(&sample);
        }
    }

    /// Writes `t, re_1, im_1, …, re_N, im_N, pop_1, …, pop_N`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = vec!["t".to_string()];
        for k in 1..=self.order {
            header.push(format!("re_{k}"));
            header.push(format!("im_{k}"));
        }
        for k in 1..=self.order {
            header.push(format!("pop_{k}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, state) in self.times.iter().zip(&self.states) {
            write!(w, "{t}")?;
            for z in state {
                write!(w, ",{},{}", z.re, z.im)?;
            }
            for z in state {
                write!(w, ",{}", z.norm_sqr())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Collects samples into a [`Trajectory`].
pub struct TrajectoryRecorder {
    inner: Trajectory,
}

impl TrajectoryRecorder {
    pub fn new(system: &str, order: usize, control: &PiecewiseConstantControl) -> Self {
        TrajectoryRecorder {
            inner: Trajectory {
                system: system.to_string(),
                order,
                control: control.clone(),
                times: Vec::new(),
                states: Vec::new(),
                cumulative_l1: Vec::new(),
                marks: Vec::new(),
            },
        }
    }

    pub fn finish(self) -> Trajectory {
        self.inner
    }
}

impl Observer for TrajectoryRecorder {
    fn observe(&mut self, sample: &Sample<'_>) {
        let t = &mut self.inner;
        t.times.push(sample.time);
        t.states.push(sample.state.to_vec());
        t.cumulative_l1.push(sample.cumulative_l1);
        t.marks.push(SampleMark {
            within: sample.within.map(|s| s.index),
            starts: sample.starts.map(|s| s.index),
        });
    }
}
