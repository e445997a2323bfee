//! Two-qubit entanglement measures on logical amplitudes `|ab>` (index `2a + b`).

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{singular_values, HermitianEigen};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `Φ+`, `Φ-`, `Ψ+`, `Ψ-`.
pub fn bell_states() -> [[Complex64; 4]; 4] {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, ZERO, ZERO, h], [h, ZERO, ZERO, -h], [ZERO, h, h, ZERO], [ZERO, h, -h, ZERO]]
}

/// Largest overlap with a standard Bell state.
pub fn bell_fidelity(amps: &[Complex64; 4]) -> f64 {
    bell_states()
        .iter()
        .map(|b| b.iter().zip(amps).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr())
        .fold(0.0, f64::max)
}

pub fn density_from_amplitudes(amps: &[Complex64; 4]) -> DMatrix<Complex64> {
    DMatrix::from_fn(4, 4, |i, j| amps[i] * amps[j].conj())
}

/// Wootters concurrence of a two-qubit density matrix.
pub fn concurrence(rho: &DMatrix<Complex64>) -> f64 {
    assert_eq!(rho.shape(), (4, 4), "concurrence needs a two-qubit density matrix");
    let herm = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let Ok(e) = HermitianEigen::new(&herm) else { return f64::NAN };
    let sqrt_rho = {
        let mut v = e.vectors.clone();
        for k in 0..4 {
            let s = e.values[k].max(0.0).sqrt();
            for i in 0..4 {
                v[(i, k)] *= s;
            }
        }
        v * e.vectors.adjoint()
    };
    // σy ⊗ σy is the anti-diagonal (-1, 1, 1, -1) pattern
    let flip = DMatrix::from_fn(4, 4, |i, j| {
        if i + j == 3 {
            Complex64::new(if i == 0 || i == 3 { -1.0 } else { 1.0 }, 0.0)
        } else {
            ZERO
        }
    });
    // λ_i of Wootters are the singular values of √ρ·√ρ̃, which avoids taking
    // square roots of round-off sized eigenvalues
    let sqrt_tilde = &flip * sqrt_rho.map(|z| z.conj()) * &flip;
    let l = singular_values(&(&sqrt_rho * sqrt_tilde));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Reduced state of qubit 1 (`which = 0`) or qubit 2 (`which = 1`).
pub fn reduced_qubit(rho: &DMatrix<Complex64>, which: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| {
        (0..2)
            .map(|k| {
                let (r, c) = if which == 0 { (2 * i + k, 2 * j + k) } else { (2 * k + i, 2 * k + j) };
                rho[(r, c)]
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bell_states_are_maximal() {
        for b in bell_states() {
            assert!((concurrence(&density_from_amplitudes(&b)) - 1.0).abs() < 1e-10);
            assert!((bell_fidelity(&b) - 1.0).abs() < 1e-14);
            let r = reduced_qubit(&density_from_amplitudes(&b), 0);
            assert!((r[(0, 0)].re - 0.5).abs() < 1e-14 && r[(0, 1)].norm() < 1e-14);
        }
    }

    #[test]
    fn product_state_has_none() {
        let a = [c(1.0, 0.0), ZERO, ZERO, ZERO];
        assert!(concurrence(&density_from_amplitudes(&a)) < 1e-12);
        assert!((bell_fidelity(&a) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn maximally_mixed_has_none() {
        let rho = DMatrix::from_diagonal_element(4, 4, c(0.25, 0.0));
        assert!(concurrence(&rho) < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_pure_state_formula(v in prop::array::uniform8(-1.0f64..1.0)) {
            let mut a: [Complex64; 4] = std::array::from_fn(|k| c(v[2 * k], v[2 * k + 1]));
            let n: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(n > 1e-3);
            for z in a.iter_mut() { *z /= n; }
            let pure = 2.0 * (a[0] * a[3] - a[1] * a[2]).norm();
            let got = concurrence(&density_from_amplitudes(&a));
            prop_assert!((got - pure).abs() < 1e-9, "{} vs {}", got, pure);
        }
    }
}
