//! Lindblad dynamics of the q-CNOT with exciton dephasing and cavity loss.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{hamiltonian_2q, logical_state_2q, qcnot_program, run_program};
use crate::ode::{dopri5, Tolerances};
use crate::phase::{effective_params_2q, Setting2Q};
use crate::units::{self, Units};
use crate::{DensityMatrix, Error, HilbertSpec, LinearOperator, QdLevel, Result, Space, StateVector};

const TOLERANCES: Tolerances = Tolerances { rtol: 1e-8, atol: 1e-10 };

/// Decoherence in SI: pure dephasing rate of each exciton (rad/s), cavity
/// quality factor, the optical frequency used for `κ = ω0/Q`, and exciton
/// decay into free space (s⁻¹, off by default).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceParams {
    pub gamma_phase: f64,
    pub q_factor: f64,
    pub omega0_si: f64,
    pub qd_radiative_rate: f64,
}

impl DecoherenceParams {
    pub fn lossless() -> Self {
        Self {
            gamma_phase: 0.0,
            q_factor: f64::INFINITY,
            omega0_si: units::angular_frequency_from_wavelength(units::DEFAULT_WAVELENGTH_M),
            qd_radiative_rate: 0.0,
        }
    }

    /// Dephasing from the linewidth `2ħγ` in µeV.
    pub fn with_linewidth_uev(mut self, uev: f64) -> Self {
        self.gamma_phase = units::dephasing_rate_from_linewidth_uev(uev);
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q_factor = q;
        self
    }

    pub fn with_qd_radiative_rate(mut self, rate_si: f64) -> Self {
        self.qd_radiative_rate = rate_si;
        self
    }

    pub fn with_wavelength(mut self, wavelength_m: f64) -> Self {
        self.omega0_si = units::angular_frequency_from_wavelength(wavelength_m);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_phase.is_finite() && self.gamma_phase >= 0.0) {
            return Err(Error::InvalidParameter(format!("dephasing rate {} must be >= 0", self.gamma_phase)));
        }
        if self.q_factor.is_nan() || self.q_factor <= 0.0 {
            return Err(Error::InvalidParameter(format!("Q factor {} must be positive", self.q_factor)));
        }
        if !(self.qd_radiative_rate.is_finite() && self.qd_radiative_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("radiative rate {} must be >= 0", self.qd_radiative_rate)));
        }
        if !(self.omega0_si.is_finite() && self.omega0_si > 0.0) {
            return Err(Error::InvalidParameter(format!("optical frequency {} must be positive", self.omega0_si)));
        }
        Ok(())
    }

    /// `(2γ, κ, radiative)` in units of `Γ`.
    pub fn natural_rates(&self, units: &Units) -> (f64, f64, f64) {
        (
            units.rate_from_si(2.0 * self.gamma_phase),
            units.rate_from_si(units::cavity_loss_rate(self.omega0_si, self.q_factor)),
            units.rate_from_si(self.qd_radiative_rate),
        )
    }
}

/// `H` plus collapse channels `(L, rate)`; each contributes `rate·D[L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    pub hamiltonian: LinearOperator,
    pub channels: Vec<(LinearOperator, f64)>,
}

impl LindbladModel {
    /// Exciton dephasing on `|x>`, `|y>`, photon loss from every cavity and
    /// optional exciton decay to `|g>`.
    pub fn new(hamiltonian: LinearOperator, space: &Space, d: &DecoherenceParams, units: &Units) -> Result<Self> {
        d.validate()?;
        let (dephasing, loss, radiative) = d.natural_rates(units);
        let mut channels = Vec::new();
        if dephasing > 0.0 {
            channels.push((space.qd_projector(QdLevel::X), dephasing));
            channels.push((space.qd_projector(QdLevel::Y), dephasing));
        }
        if loss > 0.0 {
            for (label, _) in &space.spec().cavities {
                channels.push((space.annihilation(label)?, loss));
            }
        }
        if radiative > 0.0 {
            channels.push((space.qd_transition(QdLevel::G, QdLevel::X), radiative));
            channels.push((space.qd_transition(QdLevel::G, QdLevel::Y), radiative));
        }
        Ok(Self { hamiltonian, channels })
    }

    fn generator(&self) -> Generator {
        let d = self.hamiltonian.dim();
        let mut heff = self.hamiltonian.0.clone();
        for (l, r) in &self.channels {
            heff -= (l.0.adjoint() * &l.0) * Complex64::new(0.0, 0.5 * r);
        }
        let drift = sparse(&(heff * Complex64::new(0.0, -1.0)));
        let jumps = self.channels.iter().map(|(l, r)| (sparse(&l.0), *r)).collect();
        Generator { d, drift, jumps }
    }
}

type Sparse = Vec<(usize, usize, Complex64)>;

fn sparse(m: &DMatrix<Complex64>) -> Sparse {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != Complex64::default() {
                out.push((i, j, m[(i, j)]));
            }
        }
    }
    out
}

/// `dρ = Mρ + ρM† + Σ r LρL†` with `M = -i H_eff`, on row-major storage.
struct Generator {
    d: usize,
    drift: Sparse,
    jumps: Vec<(Sparse, f64)>,
}

impl Generator {
    fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.d;
        out.fill(Complex64::default());
        for &(i, k, m) in &self.drift {
            let (src, dst) = (k * d, i * d);
            for j in 0..d {
                out[dst + j] += m * rho[src + j];
            }
        }
        for &(j, k, m) in &self.drift {
            let mc = m.conj();
            for i in 0..d {
                out[i * d + j] += rho[i * d + k] * mc;
            }
        }
        for (l, r) in &self.jumps {
            for &(i, k, a) in l {
                for &(j, m, b) in l {
                    out[i * d + j] += rho[k * d + m] * (a * b.conj() * *r);
                }
            }
        }
    }
}

fn to_flat(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let d = m.nrows();
    (0..d * d).map(|x| m[(x / d, x % d)]).collect()
}

fn from_flat(v: &[Complex64], d: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Evolves any operator (not only states) for time `t` under the model.
pub fn evolve_operator(m: &LindbladModel, op: &DMatrix<Complex64>, t: f64) -> Result<DMatrix<Complex64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("evolution time {t} must be finite and non-negative")));
    }
    let g = m.generator();
    let y = dopri5(|y, dy| g.apply(y, dy), &to_flat(op), t, TOLERANCES)?;
    Ok(from_flat(&y, g.d))
}

pub fn integrate_master(m: &LindbladModel, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    Ok(DensityMatrix(evolve_operator(m, &rho0.0, t)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelityDefinition {
    /// Mean of `<ideal|ρ|ideal>` over the four logical basis inputs.
    BasisAverage,
    /// Process (entanglement) fidelity with the ideal gate.
    Process,
}

struct GateModels {
    space: Space,
    segments: Vec<(LindbladModel, f64)>,
    ideal: Vec<StateVector>,
}

fn qcnot_models(d: &DecoherenceParams, units: &Units) -> Result<GateModels> {
    let space = Space::new(HilbertSpec::two_qubit(1))?;
    let segments = [(Setting2Q::A, FRAC_PI_4), (Setting2Q::B, FRAC_PI_2), (Setting2Q::C, FRAC_PI_4)]
        .into_iter()
        .map(|(s, t)| {
            let h = hamiltonian_2q(&effective_params_2q(&s.settings(), 1.0, 0.0)?, &space)?;
            Ok((LindbladModel::new(h, &space, d, units)?, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let ideal = (0..4)
        .map(|k| run_program(&space, &qcnot_program(), &logical_state_2q(&space, k / 2, k % 2)?))
        .collect::<Result<_>>()?;
    Ok(GateModels { space, segments, ideal })
}

fn run_segments(models: &GateModels, op: DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    models.segments.iter().try_fold(op, |acc, (m, t)| evolve_operator(m, &acc, *t))
}

/// q-CNOT fidelity with decoherence; `units` anchors SI rates to `Γ`.
pub fn qcnot_fidelity(d: &DecoherenceParams, units: &Units, def: FidelityDefinition) -> Result<f64> {
    let models = qcnot_models(d, units)?;
    let inputs: Vec<StateVector> =
        (0..4).map(|k| logical_state_2q(&models.space, k / 2, k % 2)).collect::<Result<_>>()?;
    match def {
        FidelityDefinition::BasisAverage => {
            let f = (0..4)
                .into_par_iter()
                .map(|k| {
                    let rho = run_segments(&models, DensityMatrix::from_pure(&inputs[k]).0)?;
                    Ok(DensityMatrix(rho).expectation(&models.ideal[k]))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(f.iter().sum::<f64>() / 4.0)
        }
        FidelityDefinition::Process => {
            // E(|j><i|) = E(|i><j|)†, so the upper triangle suffices
            let pairs: Vec<(usize, usize)> = (0..4).flat_map(|i| (i..4).map(move |j| (i, j))).collect();
            let terms = pairs
                .par_iter()
                .map(|&(i, j)| {
                    let out = run_segments(&models, &inputs[i].0 * inputs[j].0.adjoint())?;
                    let v = models.ideal[i].0.dotc(&(&out * &models.ideal[j].0));
                    Ok(if i == j { v.re } else { 2.0 * v.re })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(terms.iter().sum::<f64>() / 16.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Grid values are linewidths `2ħγ` in µeV.
    Dephasing,
    /// Grid values are quality factors.
    QFactor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySweepResult {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub fidelity: Vec<f64>,
}

impl FidelitySweepResult {
    /// Fidelity never increases with decoherence (within `slack`).
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.fidelity.windows(2).all(|w| match self.axis {
            SweepAxis::Dephasing => w[1] <= w[0] + slack,
            SweepAxis::QFactor => w[1] >= w[0] - slack,
        })
    }

    /// Grid value where the fidelity crosses `level`, interpolated linearly
    /// (logarithmically for Q).
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let log = self.axis == SweepAxis::QFactor;
        self.grid.windows(2).zip(self.fidelity.windows(2)).find_map(|(x, f)| {
            if (f[0] - level) * (f[1] - level) > 0.0 || f[0] == f[1] {
                return None;
            }
            let s = (level - f[0]) / (f[1] - f[0]);
            Some(if log { (x[0].ln() + s * (x[1].ln() - x[0].ln())).exp() } else { x[0] + s * (x[1] - x[0]) })
        })
    }
}

/// Evaluates the fidelity along one decoherence axis; other parameters come from `fixed`.
pub fn fidelity_sweep(
    axis: SweepAxis,
    grid: &[f64],
    fixed: &DecoherenceParams,
    units: &Units,
    def: FidelityDefinition,
) -> Result<FidelitySweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("sweep grid must be sorted ascending".into()));
    }
    let fidelity = grid
        .par_iter()
        .map(|&v| {
            let d = match axis {
                SweepAxis::Dephasing => fixed.with_linewidth_uev(v),
                SweepAxis::QFactor => fixed.with_q(v),
            };
            qcnot_fidelity(&d, units, def)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelitySweepResult { axis, grid: grid.to_vec(), fidelity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve;

    fn units() -> Units {
        Units::from_quarter_lifetime_ps(38.5).unwrap()
    }

    fn space() -> Space {
        Space::new(HilbertSpec::two_qubit(1)).unwrap()
    }

    fn step_a(s: &Space) -> LinearOperator {
        hamiltonian_2q(&effective_params_2q(&Setting2Q::A.settings(), 1.0, 0.0).unwrap(), s).unwrap()
    }

    #[test]
    fn lossless_master_equation_matches_schrodinger() {
        let s = space();
        let h = step_a(&s);
        let m = LindbladModel::new(h.clone(), &s, &DecoherenceParams::lossless(), &units()).unwrap();
        assert!(m.channels.is_empty());
        let psi = logical_state_2q(&s, 1, 1).unwrap();
        let rho = integrate_master(&m, &DensityMatrix::from_pure(&psi), 0.6).unwrap();
        let out = evolve(&h, 0.6, &psi).unwrap();
        let want = DensityMatrix::from_pure(&out);
        let err = (&rho.0 - &want.0).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn cavity_loss_empties_a_photon_exponentially() {
        // H = 0, κ = 1 in natural units: <n>(t) = e^{-t}
        let s = space();
        let u = Units::new(1.0).unwrap();
        let d = DecoherenceParams { q_factor: 1.0, omega0_si: 1.0, ..DecoherenceParams::lossless() };
        let m = LindbladModel::new(s.zero(), &s, &d, &u).unwrap();
        let psi = s.basis_state(&[("c5", 1)], QdLevel::G).unwrap();
        let rho = integrate_master(&m, &DensityMatrix::from_pure(&psi), 1.3).unwrap();
        assert!((rho.expectation(&psi) - (-1.3f64).exp()).abs() < 1e-7);
        assert!((rho.trace().re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dephasing_damps_exciton_coherence_at_gamma() {
        let s = space();
        let u = Units::new(1.0).unwrap();
        let d = DecoherenceParams { gamma_phase: 0.25, omega0_si: 1.0, ..DecoherenceParams::lossless() };
        let m = LindbladModel::new(s.zero(), &s, &d, &u).unwrap();
        let g = s.basis_state(&[], QdLevel::G).unwrap();
        let x = s.basis_state(&[], QdLevel::X).unwrap();
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = StateVector((&g.0 + &x.0) * h);
        let rho = integrate_master(&m, &DensityMatrix::from_pure(&psi), 2.0).unwrap();
        // channel rate 2γ = 0.5 damps the g-x coherence as e^{-γt}
        let i = s.index(&[0, 0, 0, 0], QdLevel::G).unwrap();
        let j = s.index(&[0, 0, 0, 0], QdLevel::X).unwrap();
        assert!((rho.0[(i, j)].re - 0.5 * (-0.5f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn radiative_decay_is_off_by_default_and_exponential_when_on() {
        let s = space();
        let u = Units::new(1.0).unwrap();
        assert_eq!(LindbladModel::new(s.zero(), &s, &DecoherenceParams::lossless(), &u).unwrap().channels.len(), 0);
        let d = DecoherenceParams::lossless().with_qd_radiative_rate(0.7);
        let m = LindbladModel::new(s.zero(), &s, &d, &u).unwrap();
        let y = s.basis_state(&[], QdLevel::Y).unwrap();
        let rho = integrate_master(&m, &DensityMatrix::from_pure(&y), 1.5).unwrap();
        assert!((rho.expectation(&y) - (-1.05f64).exp()).abs() < 1e-8);
        assert!((rho.trace().re - 1.0).abs() < 1e-8);
        assert!(DecoherenceParams::lossless().with_qd_radiative_rate(-1.0).validate().is_err());
    }

    #[test]
    fn density_matrix_stays_physical() {
        let s = space();
        let d = DecoherenceParams::lossless().with_linewidth_uev(3.0).with_q(1e7);
        let m = LindbladModel::new(step_a(&s), &s, &d, &units()).unwrap();
        let psi = logical_state_2q(&s, 0, 1).unwrap();
        let rho = integrate_master(&m, &DensityMatrix::from_pure(&psi), FRAC_PI_4).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-8);
        assert!(rho.hermiticity_deviation() < 1e-10);
        assert!(rho.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn lossless_fidelity_is_one() {
        for def in [FidelityDefinition::BasisAverage, FidelityDefinition::Process] {
            let f = qcnot_fidelity(&DecoherenceParams::lossless(), &units(), def).unwrap();
            assert!((f - 1.0).abs() < 1e-8, "{def:?} {f}");
        }
    }

    #[test]
    fn dimensionless_scaling() {
        // scaling Γ, γ and ω0 together leaves every natural-unit rate unchanged
        let d = DecoherenceParams::lossless().with_linewidth_uev(2.0).with_q(2e7);
        let u = units();
        let f1 = qcnot_fidelity(&d, &u, FidelityDefinition::BasisAverage).unwrap();
        let d10 = DecoherenceParams { gamma_phase: 10.0 * d.gamma_phase, omega0_si: 10.0 * d.omega0_si, ..d };
        let u10 = Units::new(10.0 * u.gamma_si).unwrap();
        let f2 = qcnot_fidelity(&d10, &u10, FidelityDefinition::BasisAverage).unwrap();
        assert!((f1 - f2).abs() < 1e-8);
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        let r = fidelity_sweep(
            SweepAxis::Dephasing,
            &[2.0, 1.0],
            &DecoherenceParams::lossless(),
            &units(),
            FidelityDefinition::BasisAverage,
        );
        assert!(r.is_err());
    }

    #[test]
    fn crossing_interpolates() {
        let r = FidelitySweepResult {
            axis: SweepAxis::Dephasing,
            grid: vec![0.0, 1.0, 2.0],
            fidelity: vec![1.0, 0.95, 0.85],
        };
        assert!((r.crossing(0.9).unwrap() - 1.5).abs() < 1e-12);
        assert!(r.is_monotone(0.0));
        let q = FidelitySweepResult { axis: SweepAxis::QFactor, grid: vec![1e6, 1e8], fidelity: vec![0.8, 1.0] };
        assert!((q.crossing(0.9).unwrap() - 1e7).abs() < 1e-3);
    }
}
