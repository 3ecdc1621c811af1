use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::galerkin::Compression;

/// Above this order the dense decomposition is reported as expensive.
pub const DENSE_ORDER_LIMIT: usize = 2000;

/// Spectral decomposition `H = V diag(E) V^*` of `i (A^(N) + u B^(N))`.
#[derive(Debug, Clone)]
pub(crate) enum Eigensystem {
    Real {
        energies: Vec<f64>,
        vectors: DMatrix<f64>,
    },
    Complex {
        energies: Vec<f64>,
        vectors: DMatrix<Complex64>,
    },
}

impl Eigensystem {
    pub fn new(comp: &Compression<'_>, u: f64) -> Self {
        let n = comp.order();
        if n > DENSE_ORDER_LIMIT {
            log::warn!(
                "dense eigendecomposition at order {n} (~{:.1e} flops per control value)",
                10.0 * (n as f64).powi(3)
            );
        }
        match comp.real_hamiltonian(u) {
            Some(h) => {
                let eig = SymmetricEigen::new(h);
                Eigensystem::Real {
                    energies: eig.eigenvalues.iter().copied().collect(),
                    vectors: eig.eigenvectors,
                }
            }
            None => {
                let eig = SymmetricEigen::new(comp.hamiltonian(u));
                Eigensystem::Complex {
                    energies: eig.eigenvalues.iter().copied().collect(),
                    vectors: eig.eigenvectors,
                }
            }
        }
    }

    fn energies(&self) -> &[f64] {
        match self {
            Eigensystem::Real { energies, .. } | Eigensystem::Complex { energies, .. } => energies,
        }
    }

    /// `y = V^* x`.
    pub fn to_eigenbasis(&self, x: &[Complex64], y: &mut [Complex64]) {
        match self {
            Eigensystem::Real { vectors, .. } => {
                let n = vectors.nrows();
                let data = vectors.as_slice();
                for (i, yi) in y.iter_mut().enumerate() {
                    let col = &data[i * n..(i + 1) * n];
                    let mut acc = Complex64::default();
                    for (v, z) in col.iter().zip(x) {
                        acc += z * *v;
                    }
                    *yi = acc;
                }
            }
            Eigensystem::Complex { vectors, .. } => {
                let n = vectors.nrows();
                let data = vectors.as_slice();
                for (i, yi) in y.iter_mut().enumerate() {
                    let col = &data[i * n..(i + 1) * n];
                    let mut acc = Complex64::default();
                    for (v, z) in col.iter().zip(x) {
                        acc += v.conj() * z;
                    }
                    *yi = acc;
                }
            }
        }
    }

    /// `x = V diag(exp(-i E dt)) y`.
    pub fn from_eigenbasis(&self, y: &[Complex64], dt: f64, x: &mut [Complex64]) {
        x.iter_mut().for_each(|z| *z = Complex64::default());
        let energies = self.energies();
        match self {
            Eigensystem::Real { vectors, .. } => {
                let n = vectors.nrows();
                let data = vectors.as_slice();
                for (i, yi) in y.iter().enumerate() {
                    let c = yi * Complex64::from_polar(1.0, -energies[i] * dt);
                    let col = &data[i * n..(i + 1) * n];
                    for (xk, v) in x.iter_mut().zip(col) {
                        *xk += c * *v;
                    }
                }
            }
            Eigensystem::Complex { vectors, .. } => {
                let n = vectors.nrows();
                let data = vectors.as_slice();
                for (i, yi) in y.iter().enumerate() {
                    let c = yi * Complex64::from_polar(1.0, -energies[i] * dt);
                    let col = &data[i * n..(i + 1) * n];
                    for (xk, v) in x.iter_mut().zip(col) {
                        *xk += c * v;
                    }
                }
            }
        }
    }

    /// `exp(dt (A + u B)) = V diag(exp(-i E dt)) V^*`.
    pub fn exponential(&self, dt: f64) -> DMatrix<Complex64> {
        let energies = self.energies();
        let phases = |i: usize| Complex64::from_polar(1.0, -energies[i] * dt);
        match self {
            Eigensystem::Real { vectors, .. } => {
                let v = vectors.map(|x| Complex64::new(x, 0.0));
                let mut scaled = v.clone();
                for (i, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= phases(i);
                }
                scaled * v.transpose()
            }
            Eigensystem::Complex { vectors, .. } => {
                let mut scaled = vectors.clone();
                for (i, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= phases(i);
                }
                scaled * vectors.adjoint()
            }
        }
    }
}
