//! Spectral-Galerkin simulation, resonant control synthesis and runtime
//! diagnostics for bilinear closed quantum systems `ψ' = (A + u(t) B) ψ`.

pub mod diagnostics;
pub mod error;
pub mod galerkin;
pub mod propagator;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use galerkin::{compress, Compression};
pub use num_complex::Complex64;
pub use propagator::{PiecewiseConstantControl, StateSpec, Trajectory};
pub use spectral::{BuiltinSystem, ControlSet, SpectralSystem};
pub use synth::{PeriodicPulse, PulseShape, Waveform};
pub use diagnostics::{DiagnosticReport, Verdict};
