//! Inverse map: effective parameters back to phases.
//!
//! Multi-start Levenberg–Marquardt on the constrained fields. Starts are the
//! named settings first, then uniform random phases from a seeded ChaCha stream.

use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{effective_2q_jacobian, effective_2q_natural, EffectiveParams2Q, ParamMask, PhaseSettings2Q, Setting2Q};
use crate::{Error, Result};

/// Iterates are kept this far from a resonant round trip.
const SINGULAR_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub seed: u64,
    pub max_starts: usize,
    pub max_iterations: usize,
    /// Forward-verification tolerance on every constrained field.
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { seed: 0, max_starts: 4000, max_iterations: 200, tolerance: 1e-9 }
    }
}

/// Finds phases whose effective parameters match `target` (natural units:
/// `Γ = 1`, `ω0 = 0`) on the fields selected by `mask`.
pub fn solve_phase_settings(
    target: &EffectiveParams2Q,
    mask: &ParamMask,
    opts: &SolverOptions,
) -> Result<PhaseSettings2Q> {
    let goal = target.as_array();
    if goal.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("target contains non-finite values".into()));
    }
    if mask.count() == 0 {
        return Ok(Setting2Q::Hold.settings());
    }
    let rows: Vec<usize> = (0..12).filter(|&i| mask.0[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = f64::INFINITY;

    for start in 0..opts.max_starts {
        let th0 = match Setting2Q::ALL.get(start) {
            Some(s) => s.settings().as_array(),
            None => std::array::from_fn(|_| rng.gen_range(-PI..2.0 * PI)),
        };
        if PhaseSettings2Q::from_array_unchecked(th0).singularity_margin() < SINGULAR_GUARD {
            continue;
        }
        let th = levenberg_marquardt(th0, &goal, &rows, opts);
        let s = PhaseSettings2Q::from_array_unchecked(th);
        if let Ok(v) = effective_2q_natural(&th) {
            let err = rows.iter().map(|&i| (v[i] - goal[i]).abs()).fold(0.0, f64::max);
            best = best.min(err);
            if err < opts.tolerance && s.singularity_margin() >= SINGULAR_GUARD {
                return Ok(s);
            }
        }
    }
    Err(Error::NoSolutionFound { starts: opts.max_starts, best_residual: best })
}

fn residual(th: &[f64; 8], goal: &[f64; 12], rows: &[usize]) -> Option<(Vec<f64>, Vec<[f64; 8]>)> {
    let (v, j) = effective_2q_jacobian(th).ok()?;
    Some((rows.iter().map(|&i| v[i] - goal[i]).collect(), rows.iter().map(|&i| j[i]).collect()))
}

fn wrap(th: &mut [f64; 8]) {
    for t in th.iter_mut() {
        *t = (*t + PI).rem_euclid(2.0 * PI) - PI;
    }
}

fn levenberg_marquardt(mut th: [f64; 8], goal: &[f64; 12], rows: &[usize], opts: &SolverOptions) -> [f64; 8] {
    let Some((mut r, mut jac)) = residual(&th, goal, rows) else { return th };
    let mut cost: f64 = r.iter().map(|x| x * x).sum();
    let mut mu = 1e-3;
    for _ in 0..opts.max_iterations {
        if r.iter().all(|x| x.abs() < 1e-2 * opts.tolerance) {
            break;
        }
        let mut jtj = SMatrix::<f64, 8, 8>::zeros();
        let mut jtr = SVector::<f64, 8>::zeros();
        for (ri, ji) in r.iter().zip(&jac) {
            for a in 0..8 {
                jtr[a] += ji[a] * ri;
                for b in 0..8 {
                    jtj[(a, b)] += ji[a] * ji[b];
                }
            }
        }
        let mut accepted = false;
        while mu < 1e12 {
            let mut m = jtj;
            for a in 0..8 {
                m[(a, a)] += mu * (jtj[(a, a)] + 1e-9);
            }
            let Some(step) = m.cholesky().map(|c| c.solve(&(-jtr))) else {
                mu *= 4.0;
                continue;
            };
            let mut trial = th;
            for a in 0..8 {
                trial[a] += step[a];
            }
            if PhaseSettings2Q::from_array_unchecked(trial).singularity_margin() >= SINGULAR_GUARD {
                if let Some((r2, j2)) = residual(&trial, goal, rows) {
                    let c2: f64 = r2.iter().map(|x| x * x).sum();
                    if c2 < cost {
                        wrap(&mut trial);
                        th = trial;
                        r = r2;
                        jac = j2;
                        cost = c2;
                        mu = (mu / 3.0).max(1e-12);
                        accepted = true;
                        break;
                    }
                }
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    th
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::effective_params_2q;
    use proptest::prelude::*;

    #[test]
    fn recovers_gate_row() {
        let target = effective_params_2q(&Setting2Q::D.settings(), 1.0, 0.0).unwrap();
        let s = solve_phase_settings(&target, &ParamMask::all(), &SolverOptions::default()).unwrap();
        let got = effective_params_2q(&s, 1.0, 0.0).unwrap().as_array();
        for (a, b) in got.iter().zip(target.as_array()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn resonant_cavity_exchange_on_waveguide_two() {
        // g56 = 2, everything else zero. Witness: M6 = 2π/3, 56 = π/6, 5x = -π/6, Mx = π.
        let witness =
            PhaseSettings2Q::from_array([PI, PI / 2.0, 0.0, PI, PI, -PI / 6.0, PI / 6.0, 2.0 * PI / 3.0]).unwrap();
        let target = effective_params_2q(&witness, 1.0, 0.0).unwrap();
        let mut expected = [0.0; 12];
        expected[9] = 2.0;
        for (a, b) in target.as_array().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let s = solve_phase_settings(&target, &ParamMask::all(), &SolverOptions::default()).unwrap();
        let got = effective_params_2q(&s, 1.0, 0.0).unwrap().as_array();
        for (a, b) in got.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn masked_fields_are_free() {
        let mut t = [0.0; 12];
        t[3] = -2.0;
        let mask = ParamMask::only(&["c6"]).unwrap();
        let s = solve_phase_settings(&EffectiveParams2Q::from_array(t), &mask, &SolverOptions::default()).unwrap();
        let got = effective_params_2q(&s, 1.0, 0.0).unwrap();
        assert!((got.omega_c6 + 2.0).abs() < 1e-9);
    }

    #[test]
    fn unreachable_target_reports_failure() {
        // c4·gy3 = g34·gy4 holds for every phase choice.
        let mut t = [0.0; 12];
        t[1] = 1.0;
        t[7] = 1.0;
        let mask = ParamMask::only(&["c4", "gy3", "g34"]).unwrap();
        let opts = SolverOptions { max_starts: 50, ..Default::default() };
        let err = solve_phase_settings(&EffectiveParams2Q::from_array(t), &mask, &opts).unwrap_err();
        assert!(matches!(err, Error::NoSolutionFound { .. }));
    }

    #[test]
    fn deterministic_for_seed() {
        let mut t = [0.0; 12];
        t[9] = 2.0;
        let o = SolverOptions { seed: 11, ..Default::default() };
        let a = solve_phase_settings(&EffectiveParams2Q::from_array(t), &ParamMask::all(), &o).unwrap();
        let b = solve_phase_settings(&EffectiveParams2Q::from_array(t), &ParamMask::all(), &o).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_through_forward_map(th in prop::array::uniform8(-PI..2.0 * PI)) {
            let s = PhaseSettings2Q::from_array(th).unwrap();
            prop_assume!(s.singularity_margin() > 0.1);
            let target = effective_params_2q(&s, 1.0, 0.0).unwrap();
            let found = solve_phase_settings(&target, &ParamMask::all(), &SolverOptions::default()).unwrap();
            let got = effective_params_2q(&found, 1.0, 0.0).unwrap().as_array();
            for (a, b) in got.iter().zip(target.as_array()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
