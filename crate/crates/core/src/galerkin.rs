//! Order-`N` compressions `(A^(N), B^(N))` and truncation-order estimates.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::propagator::{terminal_state, GradedTaylor, PiecewiseConstantControl, Scheme, StateSpec};
use crate::spectral::{SpectralSystem, COUPLING_ZERO};

/// Largest order searched by [`harmonic_truncation_order`].
pub const HARMONIC_ORDER_CAP: usize = 1_000_000;

/// Projection of a system onto its first `N` eigenvectors.
#[derive(Debug, Clone)]
pub struct Compression<'a> {
    system: &'a SpectralSystem,
    eigenvalues: Vec<f64>,
    coupling: DMatrix<Complex64>,
    bandwidth: usize,
    // i·B^(N) when it is real, i.e. when every b_jk is purely imaginary.
    real_field_coupling: Option<DMatrix<f64>>,
}

/// Builds the order-`order` compression of `sys`.
pub fn compress(sys: &SpectralSystem, order: usize) -> Result<Compression<'_>> {
    if order == 0 {
        return Err(Error::ZeroOrder);
    }
    sys.check_level(order)?;
    let eigenvalues: Vec<f64> = (1..=order).map(|k| sys.eigenvalue(k)).collect();
    let mut coupling = DMatrix::<Complex64>::zeros(order, order);
    let band = sys.structural_bandwidth();
    for k in 1..=order {
        let rows = match band {
            Some(w) => k.saturating_sub(w).max(1)..=(k + w).min(order),
            None => 1..=order,
        };
        for j in rows {
            coupling[(j - 1, k - 1)] = sys.coupling(j, k);
        }
    }

    let mut bandwidth = 0;
    for k in 0..order {
        for j in 0..order {
            if coupling[(j, k)].norm() > COUPLING_ZERO {
                bandwidth = bandwidth.max(j.abs_diff(k));
            }
        }
    }
    let real_field_coupling = coupling
        .iter()
        .all(|b| b.re == 0.0)
        .then(|| coupling.map(|b| -b.im));

    Ok(Compression {
        system: sys,
        eigenvalues,
        coupling,
        bandwidth,
        real_field_coupling,
    })
}

impl<'a> Compression<'a> {
    pub fn system(&self) -> &'a SpectralSystem {
        self.system
    }

    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `λ_1, …, λ_N`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `A^(N) = diag(i λ_k)`.
    pub fn drift(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.order(),
            self.eigenvalues.iter().map(|&l| Complex64::new(0.0, l)),
        ))
    }

    /// `B^(N)`.
    pub fn coupling(&self) -> &DMatrix<Complex64> {
        &self.coupling
    }

    /// Largest `|j - k|` with a non-zero `b_jk` inside the truncation.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// `A^(N) + u B^(N)`.
    pub fn generator(&self, u: f64) -> DMatrix<Complex64> {
        self.drift() + self.coupling.scale(u)
    }

    /// The Hermitian matrix `H = i (A^(N) + u B^(N))`, so that the flow is
    /// `exp(-i t H)`.
    pub fn hamiltonian(&self, u: f64) -> DMatrix<Complex64> {
        self.generator(u).map(|z| Complex64::new(0.0, 1.0) * z)
    }

    /// `H` as a real symmetric matrix when it has no imaginary part.
    pub fn real_hamiltonian(&self, u: f64) -> Option<DMatrix<f64>> {
        let field = self.real_field_coupling.as_ref()?;
        let mut h = field.scale(u);
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            h[(k, k)] -= l;
        }
        Some(h)
    }

    /// `y = (A^(N) + u B^(N)) x` using the band structure.
    pub fn apply_generator(&self, u: f64, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.order();
        let w = self.bandwidth;
        for j in 0..n {
            let lo = j.saturating_sub(w);
            let hi = (j + w).min(n - 1);
            let mut acc = Complex64::new(0.0, self.eigenvalues[j]) * x[j];
            for k in lo..=hi {
                acc += self.coupling[(j, k)] * u * x[k];
            }
            y[j] = acc;
        }
    }
}

/// `ln` of `2^{N-1} √(N+2) / (N-1)! · √((2N)!/(N+1)!) · K^N`, the bound on the
/// distance between the order-`N` harmonic Galerkin flow and the projected
/// exact flow under an `L¹` budget `K`.
pub fn harmonic_truncation_bound_ln(order: usize, budget: f64) -> f64 {
    let n = order as f64;
    (n - 1.0) * std::f64::consts::LN_2 + 0.5 * (n + 2.0).ln() - ln_gamma(n)
        + 0.5 * (ln_gamma(2.0 * n + 1.0) - ln_gamma(n + 2.0))
        + n * budget.ln()
}

/// Smallest `N` for which the harmonic truncation bound with budget `budget`
/// is below `eps`.
///
/// The log-bound is concave in `N`, so once the bound at `N = 1` is at least
/// `eps` the admissible set is a half-line; doubling brackets it and a binary
/// search finds its left end.
pub fn harmonic_truncation_order(budget: f64, eps: f64) -> Result<usize> {
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "L1 budget must be finite and non-negative, got {budget}"
        )));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target error must be positive, got {eps}"
        )));
    }
    let target = eps.ln();
    let ok = |n: usize| harmonic_truncation_bound_ln(n, budget) < target;
    if ok(1) {
        return Ok(1);
    }
    let mut lo = 1;
    let mut hi = 2;
    while !ok(hi) {
        if hi == HARMONIC_ORDER_CAP {
            return Err(Error::OrderCapExceeded {
                cap: HARMONIC_ORDER_CAP,
            });
        }
        lo = hi;
        hi = (hi * 2).min(HARMONIC_ORDER_CAP);
    }
    // invariant: !ok(lo), ok(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// One row of a truncation convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub order: usize,
    pub reference_order: usize,
    /// `‖x_N(T) - x_ref(T)‖` with `x_N` zero-padded.
    pub error: f64,
}

/// Outcome of [`empirical_truncation_order`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub system: String,
    pub eps: f64,
    pub cap: usize,
    pub table: Vec<ConvergenceRow>,
    /// `None` when the cap was reached without meeting `eps`.
    pub order: Option<usize>,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.order.is_some()
    }
}

fn distance_padded(small: &[Complex64], large: &[Complex64]) -> f64 {
    let diff: Vec<f64> = large
        .iter()
        .enumerate()
        .map(|(i, z)| (small.get(i).copied().unwrap_or_default() - z).norm())
        .collect();
    // scaled so that differences far below 1e-154 do not underflow when squared
    let scale = diff.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    scale * diff.iter().map(|d| (d / scale).powi(2)).sum::<f64>().sqrt()
}

fn terminal_pair(
    sys: &SpectralSystem,
    control: &PiecewiseConstantControl,
    psi0: &StateSpec,
    order: usize,
    reference: usize,
    scheme: Scheme,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let small = compress(sys, order)?;
    let large = compress(sys, reference)?;
    let (x0, y0) = (psi0.to_vector(order)?, psi0.to_vector(reference)?);
    match scheme {
        Scheme::Spectral => Ok((
            terminal_state(&small, control, &x0)?,
            terminal_state(&large, control, &y0)?,
        )),
        Scheme::GradedTaylor => {
            let stepper = GradedTaylor::for_control(&large, control)
                .max(GradedTaylor::for_control(&small, control));
            Ok((
                stepper.terminal_state(&small, control, &x0)?,
                stepper.terminal_state(&large, control, &y0)?,
            ))
        }
    }
}

/// Terminal-state distance between order `N` and order `reference` for the
/// same control and initial state.
pub fn truncation_error(
    sys: &SpectralSystem,
    control: &PiecewiseConstantControl,
    psi0: &StateSpec,
    order: usize,
    reference: usize,
    scheme: Scheme,
) -> Result<ConvergenceRow> {
    if reference < order {
        return Err(Error::InvalidParameter(
            "reference order must not be below the tested order".into(),
        ));
    }
    let (small, large) = terminal_pair(sys, control, psi0, order, reference, scheme)?;
    Ok(ConvergenceRow {
        order,
        reference_order: reference,
        error: distance_padded(&small, &large),
    })
}

/// `N` against `2N` for each listed `N`.
pub fn cauchy_table(
    sys: &SpectralSystem,
    control: &PiecewiseConstantControl,
    psi0: &StateSpec,
    orders: &[usize],
    scheme: Scheme,
) -> Result<Vec<ConvergenceRow>> {
    orders
        .iter()
        .map(|&n| truncation_error(sys, control, psi0, n, 2 * n, scheme))
        .collect()
}

/// Smallest `N` in `N₀, 2N₀, 4N₀, …` whose terminal state is within `eps` of
/// the order-`2N` terminal state; `N₀` is the highest level carrying
/// amplitude in `psi0`.
///
/// This certifies the supplied control only, not a whole `L¹` ball.
pub fn empirical_truncation_order(
    sys: &SpectralSystem,
    control: &PiecewiseConstantControl,
    psi0: &StateSpec,
    eps: f64,
    cap: usize,
) -> Result<ConvergenceReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let cap = sys.levels().map_or(cap, |levels| cap.min(levels));
    let start = psi0.support();
    if start > cap {
        return Err(Error::LevelOutOfRange {
            index: start,
            available: cap,
        });
    }
    let mut table = Vec::new();
    let mut order = None;
    let mut n = start;
    let mut previous = terminal_state(&compress(sys, n)?, control, &psi0.to_vector(n)?)?;
    while 2 * n <= cap {
        let reference = 2 * n;
        let next = terminal_state(
            &compress(sys, reference)?,
            control,
            &psi0.to_vector(reference)?,
        )?;
        let error = distance_padded(&previous, &next);
        table.push(ConvergenceRow {
            order: n,
            reference_order: reference,
            error,
        });
        if error < eps {
            order = Some(n);
            break;
        }
        previous = next;
        n = reference;
    }
    Ok(ConvergenceReport {
        system: sys.name().to_string(),
        eps,
        cap,
        table,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_order() {
        assert_eq!(
            compress(&SpectralSystem::harmonic(), 0).unwrap_err(),
            Error::ZeroOrder
        );
    }

    #[test]
    fn harmonic_two_level_block() {
        let sys = SpectralSystem::harmonic();
        let c = compress(&sys, 2).unwrap();
        let i = Complex64::new(0.0, 1.0);
        assert_eq!(c.drift()[(0, 0)], -0.5 * i);
        assert_eq!(c.drift()[(1, 1)], -1.5 * i);
        assert_eq!(c.coupling()[(0, 1)], -i);
        assert_eq!(c.coupling()[(1, 0)], -i);
        assert_eq!(c.coupling()[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(c.bandwidth(), 1);
    }

    #[test]
    fn rotor_three_levels() {
        let sys = SpectralSystem::planar_rotor();
        let c = compress(&sys, 3).unwrap();
        let nonzero: Vec<_> = c.coupling().iter().filter(|b| b.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 4);
        assert!(nonzero.iter().all(|b| (b.norm() - 0.5).abs() < 1e-15));
    }

    #[test]
    fn order_one_has_zero_coupling() {
        for sys in [
            SpectralSystem::square_well(),
            SpectralSystem::harmonic(),
            SpectralSystem::planar_rotor(),
        ] {
            let c = compress(&sys, 1).unwrap();
            assert_eq!(c.coupling()[(0, 0)], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn real_hamiltonian_matches_complex() {
        let sys = SpectralSystem::square_well();
        let c = compress(&sys, 6).unwrap();
        let h = c.hamiltonian(0.7);
        let r = c.real_hamiltonian(0.7).unwrap();
        for (z, x) in h.iter().zip(r.iter()) {
            assert!((z.re - x).abs() < 1e-15 && z.im.abs() < 1e-15);
        }
        assert!((&h - h.adjoint()).norm() < 1e-15);
    }

    #[test]
    fn tabulated_order_is_capped() {
        let sys = SpectralSystem::tabulated(
            "t",
            vec![-1.0, -2.0],
            &[(1, 2, Complex64::new(0.0, 1.0))],
            crate::spectral::ControlSet::real_line(),
            None,
        )
        .unwrap();
        assert!(compress(&sys, 2).is_ok());
        assert!(matches!(
            compress(&sys, 3),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn banded_apply_matches_dense() {
        for sys in [SpectralSystem::square_well(), SpectralSystem::anharmonic(2).unwrap()] {
            let c = compress(&sys, 9).unwrap();
            let x: Vec<Complex64> = (0..9)
                .map(|k| Complex64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.05))
                .collect();
            let mut y = vec![Complex64::default(); 9];
            c.apply_generator(0.3, &x, &mut y);
            let dense = c.generator(0.3) * nalgebra::DVector::from_column_slice(&x);
            for (a, b) in y.iter().zip(dense.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn truncation_formula_examples() {
        assert_eq!(harmonic_truncation_order(3.0, 1e-4).unwrap(), 413);
        assert_eq!(harmonic_truncation_order(1e-5, 1e-4).unwrap(), 1);
        assert_eq!(harmonic_truncation_order(0.0, 1e-300).unwrap(), 1);
        assert!(harmonic_truncation_order(-1.0, 1e-4).is_err());
        assert!(harmonic_truncation_order(1.0, 0.0).is_err());
    }

    #[test]
    fn truncation_order_monotone_on_grid() {
        let budgets = [0.1, 1.0, 3.0, 10.0];
        let targets = [1e-2, 1e-4, 1e-8];
        for &k in &budgets {
            let orders: Vec<usize> = targets
                .iter()
                .map(|&e| harmonic_truncation_order(k, e).unwrap())
                .collect();
            assert!(orders.windows(2).all(|w| w[0] <= w[1]), "{k}: {orders:?}");
        }
        for &e in &targets {
            let orders: Vec<usize> = budgets
                .iter()
                .map(|&k| harmonic_truncation_order(k, e).unwrap())
                .collect();
            assert!(orders.windows(2).all(|w| w[0] <= w[1]), "{e}: {orders:?}");
        }
    }

    #[test]
    fn truncation_order_is_minimal() {
        for &(k, e) in &[(3.0, 1e-4), (1.0, 1e-8), (10.0, 1e-2), (0.5, 1e-3)] {
            let n = harmonic_truncation_order(k, e).unwrap();
            assert!(harmonic_truncation_bound_ln(n, k) < e.ln());
            if n > 1 {
                assert!(harmonic_truncation_bound_ln(n - 1, k) >= e.ln());
            }
        }
    }

    #[test]
    fn zero_control_converges_at_support() {
        let sys = SpectralSystem::planar_rotor();
        let u = PiecewiseConstantControl::constant(0.0, 3.0).unwrap();
        let report =
            empirical_truncation_order(&sys, &u, &StateSpec::Basis(3), 1e-12, 64).unwrap();
        assert_eq!(report.order, Some(3));
        assert_eq!(report.table.len(), 1);
    }

    #[test]
    fn cap_exceeded_reports_curve() {
        let sys = SpectralSystem::square_well();
        let u = PiecewiseConstantControl::constant(2.0, 1.5).unwrap();
        let report = empirical_truncation_order(&sys, &u, &StateSpec::Basis(1), 1e-14, 8).unwrap();
        assert_eq!(report.order, None);
        assert!(!report.table.is_empty());
    }
}
