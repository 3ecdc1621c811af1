//! Structural checks on systems and inequality checks on trajectories.
//!
//! Trajectory checks are [`Observer`](crate::propagator::Observer)s, so they
//! can run while a propagation streams samples or afterwards on a recorded
//! [`Trajectory`](crate::propagator::Trajectory).

mod checks;
mod graph;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use checks::{
    check_energy_variation, check_l1_lower_bound, check_norm_growth, CheckOptions,
    EnergyVariationCheck, L1LowerBoundCheck, NormGrowthCheck, DEFAULT_EDGE_GUARD,
    DEFAULT_ENERGY_TOL, DEFAULT_L1_TOL, DEFAULT_NORM_GROWTH_TOL, ZERO_COLUMN_DRIFT,
};
pub use graph::{
    find_nondegenerate_chain, transition_graph, ChainSearch, Edge, GapCoincidence,
    TransitionGraph, DEFAULT_DEGENERACY_TOL,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped { reason: String },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail)
    }
}

/// Truncation-edge guard state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guard {
    /// Largest population of the top retained level over the trajectory.
    pub edge_population: f64,
    pub threshold: f64,
    pub tripped: bool,
}

/// Outcome of one check. For inequality checks `measured`, `bound` and
/// `tolerance` describe the worst sample, and the verdict is pass iff
/// `measured ≤ bound + tolerance` there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub check: String,
    pub system: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    pub guard: Option<Guard>,
}

impl DiagnosticReport {
    /// `bound + tolerance - measured`, when all three are known.
    pub fn margin(&self) -> Option<f64> {
        Some(self.bound? + self.tolerance? - self.measured?)
    }

    /// One JSON object, no trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports contain only finite numbers")
    }
}
