//! Ladder-operator algebra for the oscillator `-Δ/2 + x²`.
//!
//! With unit mass the potential `x²` is `ω²x²/2` for `ω = √2`, so the
//! eigenvalues are `√2 (m + 1/2)` and the position operator is
//! `x = (a + a†) / √(2ω)`. Powers of `x` are therefore banded in the
//! Hermite index `m`.

use std::f64::consts::SQRT_2;

/// Oscillator frequency of `-Δ/2 + x²`.
pub const FREQUENCY: f64 = SQRT_2;

/// Eigenvalue of `-Δ/2 + x²` on the Hermite function of index `m` (0-based).
pub fn level_energy(m: usize) -> f64 {
    FREQUENCY * (m as f64 + 0.5)
}

/// `⟨m| (a + a†)⁴ |n⟩` in closed form.
pub fn quartic_ladder_element(m: usize, n: usize) -> f64 {
    let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
    let l = lo as f64;
    match hi - lo {
        0 => 6.0 * l * l + 6.0 * l + 3.0,
        2 => (4.0 * l + 6.0) * ((l + 1.0) * (l + 2.0)).sqrt(),
        4 => ((l + 1.0) * (l + 2.0) * (l + 3.0) * (l + 4.0)).sqrt(),
        _ => 0.0,
    }
}

/// `⟨φ_m, x⁴ φ_n⟩` for the normalized eigenfunctions of `-Δ/2 + x²`.
pub fn quartic_position_element(m: usize, n: usize) -> f64 {
    // x⁴ = (a + a†)⁴ / (4ω²)
    quartic_ladder_element(m, n) / (4.0 * FREQUENCY * FREQUENCY)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sum over all 2^p step sequences of `(a + a†)` from `n` to `m`.
    fn ladder_paths(power: u32, m: usize, n: usize) -> f64 {
        let mut total = 0.0;
        for mask in 0..(1u32 << power) {
            let mut level = n as i64;
            let mut weight = 1.0;
            for step in 0..power {
                if mask >> step & 1 == 1 {
                    weight *= ((level + 1) as f64).sqrt();
                    level += 1;
                } else {
                    if level == 0 {
                        weight = 0.0;
                        break;
                    }
                    weight *= (level as f64).sqrt();
                    level -= 1;
                }
            }
            if level == m as i64 {
                total += weight;
            }
        }
        total
    }

    #[test]
    fn closed_form_matches_path_enumeration() {
        for m in 0..40 {
            for n in 0..40 {
                let closed = quartic_ladder_element(m, n);
                let paths = ladder_paths(4, m, n);
                assert!(
                    (closed - paths).abs() <= 1e-10 * paths.abs().max(1.0),
                    "({m},{n}): {closed} vs {paths}"
                );
            }
        }
    }

    #[test]
    fn band_structure() {
        assert_eq!(quartic_ladder_element(3, 8), 0.0);
        assert_eq!(quartic_ladder_element(2, 5), 0.0);
        assert_eq!(quartic_ladder_element(0, 0), 3.0);
        // ⟨0|X⁴|2⟩ = 6√2
        assert!((quartic_ladder_element(0, 2) - 6.0 * SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn energies() {
        assert!((level_energy(0) - SQRT_2 / 2.0).abs() < 1e-15);
        assert!((level_energy(2) - 2.5 * SQRT_2).abs() < 1e-15);
    }
}
