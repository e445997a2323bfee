//! Single-excitation model of two cavities coupled to the Fabry–Pérot modes
//! of a mirror-terminated waveguide, with no adiabatic elimination.
//!
//! Basis `[c1, c2, modes...]`, frame rotating at the reference frequency `ω0`.
//! Mode `λ` sits at detuning `d_λ = (2πλ − θ_P)/τ_P`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::HermitianEigen;
use crate::phase::{effective_params_1q, PhaseSettings1Q, SINGULAR_EPS};
use crate::{Error, LinearOperator, Result};

/// Modes beyond the window that enter the second-order far-mode correction.
pub const TAIL_MODES: i64 = 200_000;

/// Waveguide with cavities c1, c2 between mirrors M1 and M2.
///
/// Frequencies are absolute; `omega_ref` is the frame and the frequency at
/// which the phases `θ = ω0·τ + Δ` are quoted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmtConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau_m1: f64,
    pub tau_12: f64,
    pub tau_m2: f64,
    /// Mirror reflection phases.
    pub delta1: f64,
    pub delta2: f64,
    pub omega_c1: f64,
    pub omega_c2: f64,
    pub omega_ref: f64,
    /// Replace both mirrors by open (non-reflecting) ends.
    pub open_ends: bool,
}

impl CmtConfig {
    /// Equal couplings `gamma`, cavities at `ω0`, round trip `tau_p` split
    /// evenly over the three segments, mirror phases chosen to realize `s`.
    pub fn from_phase_settings(s: &PhaseSettings1Q, gamma: f64, tau_p: f64) -> Result<Self> {
        if !(tau_p.is_finite() && tau_p > 0.0) {
            return Err(Error::InvalidParameter(format!("round-trip time {tau_p} must be positive")));
        }
        let tau = tau_p / 4.0;
        let omega_ref = s.theta_12 / tau;
        let cfg = Self {
            gamma1: gamma,
            gamma2: gamma,
            tau_m1: tau,
            tau_12: tau,
            tau_m2: tau,
            delta1: s.theta_m1 - omega_ref * tau,
            delta2: s.theta_m2 - omega_ref * tau,
            omega_c1: omega_ref,
            omega_c2: omega_ref,
            omega_ref,
            open_ends: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("Gamma1", self.gamma1), ("Gamma2", self.gamma2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        for (name, v) in [("tau_M1", self.tau_m1), ("tau_12", self.tau_12), ("tau_M2", self.tau_m2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        for v in [self.delta1, self.delta2, self.omega_c1, self.omega_c2, self.omega_ref] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{v} is not finite")));
            }
        }
        Ok(())
    }

    /// Round trip: `τ_M1`, `τ_M2` are mirror round trips, `τ_12` is one way.
    pub fn tau_p(&self) -> f64 {
        self.tau_m1 + self.tau_m2 + 2.0 * self.tau_12
    }

    /// Phases at the reference frequency.
    pub fn phase_settings(&self) -> PhaseSettings1Q {
        PhaseSettings1Q {
            theta_m1: self.omega_ref * self.tau_m1 + self.delta1,
            theta_m2: self.omega_ref * self.tau_m2 + self.delta2,
            theta_12: self.omega_ref * self.tau_12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullModelConfig {
    pub cmt: CmtConfig,
    /// Retained mode indices `λ`, inclusive.
    pub window: (i64, i64),
    /// Global phase of the cavity-waveguide coupling; physics is invariant.
    pub phi0: f64,
    /// Add the second-order shift of modes outside the window (out to
    /// [`TAIL_MODES`]) to the cavity block.
    pub far_mode_correction: bool,
}

impl FullModelConfig {
    /// `n_modes` modes centred on the reference frequency.
    pub fn centered(cmt: CmtConfig, n_modes: usize) -> Result<Self> {
        cmt.validate()?;
        let center = cmt.phase_settings().theta_p() / (2.0 * PI);
        let lo = (center - n_modes as f64 / 2.0).ceil() as i64;
        let cfg = Self { cmt, window: (lo, lo + n_modes as i64 - 1), phi0: 0.0, far_mode_correction: true };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_modes(&self) -> usize {
        (self.window.1 - self.window.0 + 1).max(0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.cmt.validate()?;
        if self.cmt.open_ends {
            return Err(Error::InvalidParameter("the mode expansion needs both mirrors".into()));
        }
        let d: Vec<f64> = (self.window.0..=self.window.1).map(|l| self.detuning(l)).collect();
        let below = d.iter().filter(|x| **x < 0.0).count();
        let above = d.iter().filter(|x| **x > 0.0).count();
        if below < 3 || above < 3 {
            return Err(Error::InvalidParameter(format!(
                "window {:?} must keep at least three modes on each side of the reference",
                self.window
            )));
        }
        if (0.5 * self.cmt.phase_settings().theta_p()).sin().abs() < SINGULAR_EPS {
            return Err(Error::SingularPhase { value: (0.5 * self.cmt.phase_settings().theta_p()).sin().abs() });
        }
        Ok(())
    }

    /// Detuning of mode `λ` from the reference.
    pub fn detuning(&self, lambda: i64) -> f64 {
        (2.0 * PI * lambda as f64 - self.cmt.phase_settings().theta_p()) / self.cmt.tau_p()
    }

    fn coupling(&self, lambda: i64) -> ModeCoupling {
        let c = &self.cmt;
        let th = c.phase_settings();
        let d = self.detuning(lambda);
        let tau_p = c.tau_p();
        let phi_2r = self.phi0;
        let phi_2l = self.phi0 + th.theta_m2 + d * c.tau_m2;
        let phi_1l = phi_2l + th.theta_12 + d * c.tau_12;
        let phi_1r = self.phi0 - th.theta_12 - d * c.tau_12;
        let a1 = (c.gamma1 / tau_p).sqrt();
        let a2 = (c.gamma2 / tau_p).sqrt();
        ModeCoupling {
            lambda,
            frequency: c.omega_ref + d,
            g1l: Complex64::from_polar(a1, phi_1l),
            g1r: Complex64::from_polar(a1, phi_1r),
            g2l: Complex64::from_polar(a2, phi_2l),
            g2r: Complex64::from_polar(a2, phi_2r),
        }
    }

    /// Second-order cavity-block shift `−Σ g_k* g_l / d_λ` over `lambdas`.
    fn mode_sum(&self, lambdas: impl Iterator<Item = i64>) -> [[Complex64; 2]; 2] {
        let mut s = [[Complex64::default(); 2]; 2];
        for l in lambdas {
            let m = self.coupling(l);
            let g = [m.g1(), m.g2()];
            let d = self.detuning(l);
            for k in 0..2 {
                for j in 0..2 {
                    s[k][j] -= g[k].conj() * g[j] / d;
                }
            }
        }
        s
    }

    fn tail(&self) -> [[Complex64; 2]; 2] {
        let (lo, hi) = self.window;
        let left = self.mode_sum(lo - TAIL_MODES..lo);
        let right = self.mode_sum(hi + 1..=hi + TAIL_MODES);
        std::array::from_fn(|k| std::array::from_fn(|j| left[k][j] + right[k][j]))
    }

    /// Effective cavity block from the explicit mode sum (window plus tail).
    pub fn mode_sum_cavity_block(&self) -> [[Complex64; 2]; 2] {
        let (lo, hi) = self.window;
        let s = self.mode_sum(lo - TAIL_MODES..=hi + TAIL_MODES);
        let w = [self.cmt.omega_c1 - self.cmt.omega_ref, self.cmt.omega_c2 - self.cmt.omega_ref];
        std::array::from_fn(|k| {
            std::array::from_fn(|j| s[k][j] + if k == j { Complex64::new(w[k], 0.0) } else { Complex64::default() })
        })
    }
}

/// Left- and right-propagating coupling of both cavities to one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoupling {
    pub lambda: i64,
    pub frequency: f64,
    pub g1l: Complex64,
    pub g1r: Complex64,
    pub g2l: Complex64,
    pub g2r: Complex64,
}

impl ModeCoupling {
    pub fn g1(&self) -> Complex64 {
        self.g1l + self.g1r
    }

    pub fn g2(&self) -> Complex64 {
        self.g2l + self.g2r
    }
}

/// Absolute Fabry–Pérot frequencies of the retained window.
pub fn fp_frequencies(cfg: &FullModelConfig) -> Vec<f64> {
    (cfg.window.0..=cfg.window.1).map(|l| cfg.cmt.omega_ref + cfg.detuning(l)).collect()
}

pub fn coupling_constants(cfg: &FullModelConfig) -> Vec<ModeCoupling> {
    (cfg.window.0..=cfg.window.1).map(|l| cfg.coupling(l)).collect()
}

fn hamiltonian(cfg: &FullModelConfig, corrected: bool) -> Result<DMatrix<Complex64>> {
    cfg.validate()?;
    let n = cfg.n_modes() + 2;
    let mut h = DMatrix::from_element(n, n, Complex64::default());
    h[(0, 0)] = Complex64::new(cfg.cmt.omega_c1 - cfg.cmt.omega_ref, 0.0);
    h[(1, 1)] = Complex64::new(cfg.cmt.omega_c2 - cfg.cmt.omega_ref, 0.0);
    let i = Complex64::new(0.0, 1.0);
    for (k, m) in coupling_constants(cfg).iter().enumerate() {
        let r = k + 2;
        h[(r, r)] = Complex64::new(cfg.detuning(m.lambda), 0.0);
        for (c, g) in [m.g1(), m.g2()].into_iter().enumerate() {
            h[(r, c)] = i * g;
            h[(c, r)] = -i * g.conj();
        }
    }
    if corrected {
        let t = cfg.tail();
        for k in 0..2 {
            for j in 0..2 {
                h[(k, j)] += t[k][j];
            }
        }
    }
    Ok(h)
}

/// Bare single-excitation Hamiltonian on `[c1, c2, modes...]`.
pub fn single_excitation_hamiltonian(cfg: &FullModelConfig) -> Result<LinearOperator> {
    Ok(LinearOperator(hamiltonian(cfg, false)?))
}

/// Cavity amplitudes and total mode population over time.
#[derive(Debug, Clone, PartialEq)]
pub struct FullModelTrace {
    pub times: Vec<f64>,
    pub c1: Vec<Complex64>,
    pub c2: Vec<Complex64>,
    pub mode_population: Vec<f64>,
}

impl FullModelTrace {
    pub fn population_c1(&self) -> Vec<f64> {
        self.c1.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn population_c2(&self) -> Vec<f64> {
        self.c2.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Evolves cavity amplitudes `initial` with all modes empty.
pub fn full_model_evolve(cfg: &FullModelConfig, initial: [Complex64; 2], times: &[f64]) -> Result<FullModelTrace> {
    let h = hamiltonian(cfg, cfg.far_mode_correction)?;
    let e = HermitianEigen::new(&h)?;
    let n = h.nrows();
    // c_k = <v_k|psi0>
    let coef: Vec<Complex64> =
        (0..n).map(|k| e.vectors[(0, k)].conj() * initial[0] + e.vectors[(1, k)].conj() * initial[1]).collect();
    let norm0 = initial[0].norm_sqr() + initial[1].norm_sqr();
    let mut trace = FullModelTrace {
        times: times.to_vec(),
        c1: Vec::with_capacity(times.len()),
        c2: Vec::with_capacity(times.len()),
        mode_population: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let (mut a1, mut a2) = (Complex64::default(), Complex64::default());
        for (k, &ck) in coef.iter().enumerate().take(n) {
            let w = ck * Complex64::from_polar(1.0, -e.values[k] * t);
            a1 += e.vectors[(0, k)] * w;
            a2 += e.vectors[(1, k)] * w;
        }
        trace.c1.push(a1);
        trace.c2.push(a2);
        trace.mode_population.push((norm0 - a1.norm_sqr() - a2.norm_sqr()).max(0.0));
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveComparison {
    /// c1 population oscillation frequency extracted from the full model.
    pub rabi_frequency: Option<f64>,
    /// `2·g12` from the effective model.
    pub expected_rabi_frequency: f64,
    pub rabi_error: Option<f64>,
    /// Largest population found in the waveguide modes.
    pub peak_leakage: f64,
    pub min_c1_population: f64,
    /// Largest deviation of the mode-sum cavity block from the effective parameters.
    pub shift_error: f64,
}

/// Largest `τ_P Γ` accepted as adiabatic.
pub const MAX_TAU_P_GAMMA: f64 = 0.02;
/// Smallest window accepted for comparisons.
pub const MIN_MODES: usize = 101;

/// Compares the full model with the effective model after checking that the
/// elimination is justified.
pub fn compare_effective(cfg: &FullModelConfig, horizon: f64) -> Result<EffectiveComparison> {
    let gamma = cfg.cmt.gamma1.max(cfg.cmt.gamma2);
    if cfg.cmt.tau_p() * gamma > MAX_TAU_P_GAMMA {
        return Err(Error::ValidityViolated(format!(
            "tau_P Gamma = {:.3} exceeds {MAX_TAU_P_GAMMA}",
            cfg.cmt.tau_p() * gamma
        )));
    }
    if cfg.n_modes() < MIN_MODES {
        return Err(Error::ValidityViolated(format!("{} modes, need at least {MIN_MODES}", cfg.n_modes())));
    }
    let gap = (0.5 * cfg.cmt.phase_settings().theta_p()).sin().abs();
    if gap < std::f64::consts::FRAC_1_SQRT_2 {
        return Err(Error::ValidityViolated(format!("reference is close to a mode (|sin(theta_P/2)| = {gap:.3})")));
    }
    compare_effective_unchecked(cfg, horizon)
}

/// [`compare_effective`] without the validity checks, for negative controls.
pub fn compare_effective_unchecked(cfg: &FullModelConfig, horizon: f64) -> Result<EffectiveComparison> {
    cfg.validate()?;
    if (cfg.cmt.gamma1 - cfg.cmt.gamma2).abs() > 1e-12 * cfg.cmt.gamma1.max(1.0) {
        return Err(Error::InvalidParameter("effective model assumes equal couplings".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
    }
    let gamma = cfg.cmt.gamma1;
    let eff = effective_params_1q(&cfg.cmt.phase_settings(), gamma, 0.0)?;
    let shift =
        [eff.omega_c1 + cfg.cmt.omega_c1 - cfg.cmt.omega_ref, eff.omega_c2 + cfg.cmt.omega_c2 - cfg.cmt.omega_ref];
    let block = cfg.mode_sum_cavity_block();
    let shift_error = [
        (block[0][0] - shift[0]).norm(),
        (block[1][1] - shift[1]).norm(),
        (block[0][1] - Complex64::new(eff.g12, 0.0)).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let dt = cfg.cmt.tau_p() / 16.0;
    let steps = (horizon / dt).ceil() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let trace = full_model_evolve(cfg, [Complex64::new(1.0, 0.0), Complex64::default()], &times)?;
    let p1 = trace.population_c1();
    let rabi_frequency = first_minimum(&smooth(&p1, 16), dt).map(|t| PI / t);
    let expected = 2.0 * eff.g12.abs();
    Ok(EffectiveComparison {
        rabi_frequency,
        expected_rabi_frequency: expected,
        rabi_error: rabi_frequency.filter(|_| expected > 0.0).map(|f| (f - expected).abs() / expected),
        peak_leakage: trace.mode_population.iter().copied().fold(0.0, f64::max),
        min_c1_population: p1.iter().copied().fold(f64::INFINITY, f64::min),
        shift_error,
    })
}

/// Centered moving average over `width` samples (one round trip), which
/// removes the mode-beating ripple.
fn smooth(x: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(x.len() - 1);
            x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Time of the first local minimum below one half, refined by a parabola.
fn first_minimum(p: &[f64], dt: f64) -> Option<f64> {
    (1..p.len().saturating_sub(1)).find(|&i| p[i] < 0.5 && p[i] <= p[i - 1] && p[i] < p[i + 1]).map(|i| {
        let (a, b, c) = (p[i - 1], p[i], p[i + 1]);
        let den = a - 2.0 * b + c;
        let off = if den.abs() > 0.0 { 0.5 * (a - c) / den } else { 0.0 };
        (i as f64 + off) * dt
    })
}
