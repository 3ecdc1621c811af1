use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ControlSet;

/// Step function `u = Σ u_j 1_[t_j, t_{j+1})` with `t_1 = 0`.
///
/// An empty control has the single breakpoint `0` and no values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawControl", into = "RawControl")]
pub struct PiecewiseConstantControl {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControl {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawControl> for PiecewiseConstantControl {
    type Error = Error;

    fn try_from(raw: RawControl) -> Result<Self> {
        PiecewiseConstantControl::new(raw.breakpoints, raw.values)
    }
}

impl From<PiecewiseConstantControl> for RawControl {
    fn from(c: PiecewiseConstantControl) -> Self {
        RawControl {
            breakpoints: c.breakpoints,
            values: c.values,
        }
    }
}

/// One constant piece of a control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

impl PiecewiseConstantControl {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidControl(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidControl("first breakpoint must be 0".into()));
        }
        if let Some(i) = breakpoints.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidControl(format!("breakpoint {i} is not finite")));
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidControl(format!(
                "breakpoints must be strictly increasing (index {})",
                i + 1
            )));
        }
        if let Some(i) = values.iter().position(|u| !u.is_finite()) {
            return Err(Error::InvalidControl(format!("value {i} is not finite")));
        }
        Ok(PiecewiseConstantControl {
            breakpoints,
            values,
        })
    }

    pub fn empty() -> Self {
        PiecewiseConstantControl {
            breakpoints: vec![0.0],
            values: Vec::new(),
        }
    }

    /// `u ≡ value` on `[0, horizon)`; empty when `horizon` is 0.
    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        if horizon == 0.0 {
            return Ok(Self::empty());
        }
        Self::new(vec![0.0, horizon], vec![value])
    }

    /// Builds breakpoints as running sums of `durations`.
    pub fn from_durations(durations: &[f64], values: Vec<f64>) -> Result<Self> {
        let mut breakpoints = Vec::with_capacity(durations.len() + 1);
        let mut t = 0.0;
        breakpoints.push(t);
        for &d in durations {
            t += d;
            breakpoints.push(t);
        }
        Self::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of constant pieces.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().expect("at least one breakpoint")
    }

    pub fn segment(&self, index: usize) -> Segment {
        Segment {
            index,
            start: self.breakpoints[index],
            end: self.breakpoints[index + 1],
            value: self.values[index],
        }
    }

    pub fn segments(&self) -> impl ExactSizeIterator<Item = Segment> + '_ {
        (0..self.values.len()).map(|i| self.segment(i))
    }

    /// `∫ |u|`.
    pub fn l1_norm(&self) -> f64 {
        self.segments().map(|s| s.value.abs() * s.duration()).sum()
    }

    /// `u(t)`, right-continuous; zero outside `[0, horizon)`.
    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 || t >= self.horizon() {
            return 0.0;
        }
        let idx = self.breakpoints.partition_point(|&b| b <= t) - 1;
        self.values[idx]
    }

    /// This control followed by `other`.
    pub fn concat(&self, other: &Self) -> Self {
        let offset = self.horizon();
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.extend(other.breakpoints[1..].iter().map(|t| t + offset));
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        PiecewiseConstantControl {
            breakpoints,
            values,
        }
    }

    /// `c · u`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.breakpoints.clone(),
            self.values.iter().map(|u| c * u).collect(),
        )
    }

    pub fn check_within(&self, set: &ControlSet) -> Result<()> {
        match self.values.iter().position(|&u| !set.contains(u)) {
            Some(segment) => Err(Error::OutsideControlSet {
                segment,
                value: self.values[segment],
            }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_breakpoints() {
        assert!(PiecewiseConstantControl::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(PiecewiseConstantControl::new(vec![0.5, 1.0], vec![1.0]).is_err());
        assert!(PiecewiseConstantControl::new(vec![0.0, 1.0], vec![]).is_err());
        assert!(PiecewiseConstantControl::new(vec![0.0, 1.0], vec![f64::NAN]).is_err());
        assert!(PiecewiseConstantControl::new(vec![0.0, f64::INFINITY], vec![1.0]).is_err());
        assert!(PiecewiseConstantControl::new(vec![0.0], vec![]).unwrap().is_empty());
    }

    #[test]
    fn l1_and_lookup() {
        let u = PiecewiseConstantControl::new(vec![0.0, 1.0, 3.0], vec![2.0, -0.5]).unwrap();
        assert_eq!(u.l1_norm(), 3.0);
        assert_eq!(u.value_at(0.0), 2.0);
        assert_eq!(u.value_at(1.0), -0.5);
        assert_eq!(u.value_at(2.999), -0.5);
        assert_eq!(u.value_at(3.0), 0.0);
        assert_eq!(u.value_at(-1.0), 0.0);
    }

    #[test]
    fn concat_shifts_times() {
        let a = PiecewiseConstantControl::constant(1.0, 2.0).unwrap();
        let b = PiecewiseConstantControl::new(vec![0.0, 1.0, 1.5], vec![3.0, 4.0]).unwrap();
        let c = a.concat(&b);
        assert_eq!(c.breakpoints(), &[0.0, 2.0, 3.0, 3.5]);
        assert_eq!(c.values(), &[1.0, 3.0, 4.0]);
        assert_eq!(c.l1_norm(), a.l1_norm() + b.l1_norm());
        assert_eq!(PiecewiseConstantControl::empty().concat(&b), b);
    }

    #[test]
    fn control_set_membership() {
        let u = PiecewiseConstantControl::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5]).unwrap();
        let bang = ControlSet::Finite {
            values: vec![0.0, 1.0],
        };
        assert_eq!(
            u.check_within(&bang),
            Err(Error::OutsideControlSet {
                segment: 1,
                value: 0.5
            })
        );
        assert!(u.check_within(&ControlSet::real_line()).is_ok());
    }

    #[test]
    fn serde_validates() {
        let ok: PiecewiseConstantControl =
            serde_json::from_str(r#"{"breakpoints":[0,1],"values":[2]}"#).unwrap();
        assert_eq!(ok.l1_norm(), 2.0);
        assert!(serde_json::from_str::<PiecewiseConstantControl>(
            r#"{"breakpoints":[0,1],"values":[2,3]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<PiecewiseConstantControl>(
            r#"{"breakpoints":[0,1],"values":[2],"extra":1}"#
        )
        .is_err());
    }
}
