//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use bilinear_core::{Complex64, PiecewiseConstantControl};
use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex64;

pub fn unit(order: usize, level: usize) -> Vec<C64> {
    let mut v = vec![C64::default(); order];
    v[level - 1] = C64::new(1.0, 0.0);
    v
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn distance(x: &[C64], y: &[C64]) -> f64 {
    let n = x.len().max(y.len());
    (0..n)
        .map(|i| {
            let a = x.get(i).copied().unwrap_or_default();
            let b = y.get(i).copied().unwrap_or_default();
            (a - b).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` via Golub-Welsch.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let k = i as f64;
        let beta = k / (4.0 * k * k - 1.0).sqrt();
        jacobi[(i - 1, i)] = beta;
        jacobi[(i, i - 1)] = beta;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (x, 2.0 * v0 * v0)
        })
        .collect();
    // polish nodes with Newton on the Legendre recurrence
    for (x, w) in pairs.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = legendre(n, *x);
            *x -= p / dp;
        }
        let (_, dp) = legendre(n, *x);
        *w = 2.0 / ((1.0 - *x * *x) * dp * dp);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss-Legendre on `[a, b]`.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, nodes: usize) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            total += wi * f(lo + 0.5 * h * (xi + 1.0));
        }
    }
    0.5 * h * total
}

/// `⟨ψ_j, x ψ_k⟩` on `(0, π)` with `ψ_k = √(2/π) sin(kx)`.
pub fn square_well_position_element(j: usize, k: usize) -> f64 {
    let (jf, kf) = (j as f64, k as f64);
    integrate_gl(
        |x| (2.0 / PI) * (jf * x).sin() * x * (kf * x).sin(),
        0.0,
        PI,
        16,
        32,
    )
}

/// `ĥ_0(x), …, ĥ_{count-1}(x)`, the L²-normalized Hermite functions.
pub fn hermite_functions(count: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(count);
    let h0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    h.push(h0);
    if count > 1 {
        h.push(2f64.sqrt() * x * h0);
    }
    for n in 1..count.saturating_sub(1) {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        h.push(next);
    }
    h
}

/// Gauss-Hermite rule for `∫ g(x) dx` with `g` a polynomial times `e^{-x²}`,
/// returned with weights `W_i` such that `∫ g ≈ Σ W_i g(x_i)`.
pub fn gauss_hermite(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(m, m);
    for i in 1..m {
        let beta = (i as f64 / 2.0).sqrt();
        jacobi[(i - 1, i)] = beta;
        jacobi[(i, i - 1)] = beta;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            // ĥ_m' = √(2m) ĥ_{m-1} - x ĥ_m
            let h = hermite_functions(m + 1, *x);
            let d = (2.0 * m as f64).sqrt() * h[m - 1] - *x * h[m];
            *x -= h[m] / d;
        }
    }
    // Christoffel weights in the weight-free form
    let weights = nodes
        .iter()
        .map(|&x| 1.0 / hermite_functions(m, x).iter().map(|v| v * v).sum::<f64>())
        .collect();
    (nodes, weights)
}

/// Matrix elements `∫ ĥ_p x^power ĥ_q` for `p, q < count`.
pub fn hermite_moment_matrix(count: usize, power: i32, rule: &(Vec<f64>, Vec<f64>)) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(count, count);
    for (x, w) in rule.0.iter().zip(&rule.1) {
        let h = hermite_functions(count, *x);
        let xp = x.powi(power);
        for p in 0..count {
            for q in 0..count {
                m[(p, q)] += w * h[p] * xp * h[q];
            }
        }
    }
    m
}

/// `(1/π) ∫₀^{2π} sin(jθ) cos θ sin(kθ) dθ` by the trapezoid rule, which is
/// exact for trigonometric polynomials of degree below the point count.
pub fn rotor_cos_element(j: usize, k: usize) -> f64 {
    let m = 512;
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|i| {
            let t = i as f64 * h;
            (j as f64 * t).sin() * t.cos() * (k as f64 * t).sin()
        })
        .sum::<f64>()
        * h
        / PI
}

/// Second derivative by a sixth-order central difference.
pub fn second_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let c = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
    let mut s = c[0] * f(x);
    for (i, ci) in c.iter().enumerate().skip(1) {
        let d = i as f64 * h;
        s += ci * (f(x + d) + f(x - d));
    }
    s / (h * h)
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// `f(N)² · den = num` exactly, for the harmonic truncation bound with an
/// integer budget `K`: `f² = 4^{N-1} (N+2) (2N)! K^{2N} / ((N-1)!² (N+1)!)`.
pub fn truncation_bound_squared(order: usize, budget: u32) -> (BigUint, BigUint) {
    let n = order;
    let num = BigUint::from(4u32).pow((n - 1) as u32)
        * BigUint::from(n + 2)
        * factorial(2 * n)
        * BigUint::from(budget).pow(2 * n as u32);
    let fm1 = factorial(n - 1);
    let den = &fm1 * &fm1 * factorial(n + 1);
    (num, den)
}

/// `ln(num/den)` for big integers that need not fit in `f64`.
pub fn ln_ratio(num: &BigUint, den: &BigUint) -> f64 {
    fn ln_big(x: &BigUint) -> f64 {
        let bits = x.bits();
        let shift = bits.saturating_sub(60);
        let top = (x >> shift).to_u64_digits().first().copied().unwrap_or(0) as f64;
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
    ln_big(num) - ln_big(den)
}

/// Smallest `N` with `f(N) < 10^{-digits}`, decided in exact integer
/// arithmetic.
pub fn exact_truncation_order(budget: u32, digits: u32, cap: usize) -> Option<usize> {
    let scale = BigUint::from(10u32).pow(2 * digits);
    (1..=cap).find(|&n| {
        let (num, den) = truncation_bound_squared(n, budget);
        num * &scale < den
    })
}

/// Every coupled pair `(j, k)`, `j < k ≤ order`, whose gap matches the gap of
/// another coupled pair sharing exactly one level, by an all-pairs scan.
pub fn brute_force_degenerate(
    gap: impl Fn(usize, usize) -> f64,
    coupled: impl Fn(usize, usize) -> bool,
    order: usize,
    tol: f64,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 1..=order {
        for k in (j + 1)..=order {
            if !coupled(j, k) {
                continue;
            }
            let mut hit = false;
            'scan: for l in 1..=order {
                for m in (l + 1)..=order {
                    if (l, m) == (j, k) || !coupled(l, m) {
                        continue;
                    }
                    let shared = [j, k].iter().filter(|v| **v == l || **v == m).count();
                    if shared == 1 && (gap(j, k) - gap(l, m)).abs() <= tol {
                        hit = true;
                        break 'scan;
                    }
                }
            }
            if hit {
                out.push((j, k));
            }
        }
    }
    out
}

/// Classical RK4 for `ẋ = G(t) x` with a fixed step.
pub fn rk4(
    generator: impl Fn(f64) -> DMatrix<C64>,
    x0: &[C64],
    horizon: f64,
    steps: usize,
) -> Vec<C64> {
    let h = horizon / steps as f64;
    let mut x = nalgebra::DVector::from_column_slice(x0);
    for i in 0..steps {
        let t = i as f64 * h;
        let g0 = generator(t);
        let gm = generator(t + 0.5 * h);
        let g1 = generator(t + h);
        let k1 = &g0 * &x;
        let k2 = &gm * (&x + &k1 * C64::from(0.5 * h));
        let k3 = &gm * (&x + &k2 * C64::from(0.5 * h));
        let k4 = &g1 * (&x + &k3 * C64::from(h));
        x += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(h / 6.0);
    }
    x.iter().copied().collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random piecewise-constant control with `segments` pieces of duration in
/// `[0.01, max_duration)` and values in `[-max_value, max_value)`.
pub fn random_control(
    r: &mut impl Rng,
    segments: usize,
    max_duration: f64,
    max_value: f64,
) -> PiecewiseConstantControl {
    let durations: Vec<f64> = (0..segments).map(|_| r.gen_range(0.01..max_duration)).collect();
    let values = (0..segments).map(|_| r.gen_range(-max_value..max_value)).collect();
    PiecewiseConstantControl::from_durations(&durations, values).unwrap()
}

/// Random unit vector on the first `support` levels of an order-`order` space.
pub fn random_state(r: &mut impl Rng, order: usize, support: usize) -> Vec<C64> {
    let mut v = vec![C64::default(); order];
    for z in v.iter_mut().take(support) {
        *z = C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
    }
    let n = norm(&v);
    v.iter_mut().for_each(|z| *z /= n);
    v
}
