//! Adaptive Dormand–Prince 5(4) for complex state vectors.

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

const MAX_STEPS: usize = 1_000_000;

/// Integrates `dy/dt = f(y)` (autonomous) from 0 to `t_end`.
pub(crate) fn dopri5<F>(f: F, y0: &[Complex64], t_end: f64, tol: Tolerances) -> Result<Vec<Complex64>>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    if t_end <= 0.0 {
        return Ok(y);
    }
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n]; 7];
    let mut tmp = vec![Complex64::default(); n];
    let mut y_new = vec![Complex64::default(); n];
    f(&y, &mut k[0]);

    let scale0: f64 = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let slope0: f64 = k[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut h = if slope0 > 0.0 { (0.01 * (scale0 + tol.atol) / slope0).min(t_end) } else { t_end };
    let mut t = 0.0;
    let mut steps = 0;

    while t < t_end {
        if steps >= MAX_STEPS || h < 1e-14 * t_end.max(1.0) {
            return Err(Error::IntegratorFailure { t, step: h });
        }
        steps += 1;
        h = h.min(t_end - t);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        acc += kj[i] * (h * A[s][j]);
                    }
                }
                tmp[i] = acc;
            }
            f(&tmp, &mut k[s]);
        }
        // stage 7 was evaluated at the fifth-order solution
        y_new.copy_from_slice(&tmp);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = Complex64::default();
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[i] * E[j];
                }
            }
            let sc = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max((e * h).norm() / sc);
        }
        if !err.is_finite() {
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            // first-same-as-last
            k.swap(0, 6);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= if err <= 1.0 { factor } else { factor.min(1.0) };
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_rotation() {
        let lam = Complex64::new(-0.3, 2.0);
        let y = dopri5(
            |y, dy| dy[0] = lam * y[0],
            &[Complex64::new(1.0, 0.0)],
            3.0,
            Tolerances { rtol: 1e-10, atol: 1e-12 },
        )
        .unwrap();
        assert!((y[0] - (lam * 3.0).exp()).norm() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator() {
        let y = dopri5(
            |y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            10.0,
            Tolerances { rtol: 1e-10, atol: 1e-12 },
        )
        .unwrap();
        assert!((y[0].re - 10f64.cos()).abs() < 1e-8);
    }
}
