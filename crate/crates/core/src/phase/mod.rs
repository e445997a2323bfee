//! Mirror and propagation phases mapped to effective cavity parameters.
//!
//! Every effective quantity has the form `p·χ(x, y, θ_P)` where `x`, `y` are
//! integer combinations of the phases and
//! `χ(x, y, z) = [cos((x+y)/2) + cos((x−y)/2)] / sin(z/2)`.

mod solver;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

pub use solver::{solve_phase_settings, SolverOptions};

use crate::{Error, Result};

/// `|sin(θ_P/2)|` below this is treated as a cavity resonant with a waveguide mode.
pub const SINGULAR_EPS: f64 = 1e-6;

pub fn chi(x: f64, y: f64, z: f64) -> Result<f64> {
    let s = (0.5 * z).sin();
    if s.abs() < SINGULAR_EPS {
        return Err(Error::SingularPhase { value: s.abs() });
    }
    Ok(((0.5 * (x + y)).cos() + (0.5 * (x - y)).cos()) / s)
}

/// `χ` and its partial derivatives `(∂x, ∂y, ∂z)`.
pub fn chi_with_gradient(x: f64, y: f64, z: f64) -> Result<(f64, [f64; 3])> {
    let s = (0.5 * z).sin();
    if s.abs() < SINGULAR_EPS {
        return Err(Error::SingularPhase { value: s.abs() });
    }
    let (sp, cp) = (0.5 * (x + y)).sin_cos();
    let (sm, cm) = (0.5 * (x - y)).sin_cos();
    let n = cp + cm;
    let dx = -0.5 * (sp + sm) / s;
    let dy = -0.5 * (sp - sm) / s;
    let dz = -0.5 * n * (0.5 * z).cos() / (s * s);
    Ok((n / s, [dx, dy, dz]))
}

/// Phases of a single waveguide hosting cavities `c1`, `c2` between mirrors M1, M2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSettings1Q {
    pub theta_m1: f64,
    pub theta_m2: f64,
    pub theta_12: f64,
}

impl PhaseSettings1Q {
    pub fn new(theta_m1: f64, theta_m2: f64, theta_12: f64) -> Result<Self> {
        for v in [theta_m1, theta_m2, theta_12] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("phase {v} is not finite")));
            }
        }
        Ok(Self { theta_m1, theta_m2, theta_12 })
    }

    /// Round-trip phase `θ_M1 + θ_M2 + 2θ_12`.
    pub fn theta_p(&self) -> f64 {
        self.theta_m1 + self.theta_m2 + 2.0 * self.theta_12
    }
}

/// Named one-qubit settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting1Q {
    Hold,
    Rabi,
    RelativePhase,
}

impl Setting1Q {
    pub fn settings(self) -> PhaseSettings1Q {
        let (m1, m2, t12) = match self {
            Setting1Q::Hold => (PI, 0.0, 0.0),
            Setting1Q::Rabi => (FRAC_PI_2, FRAC_PI_2, 0.0),
            Setting1Q::RelativePhase => (PI, FRAC_PI_2, -FRAC_PI_4),
        };
        PhaseSettings1Q { theta_m1: m1, theta_m2: m2, theta_12: t12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams1Q {
    pub omega_c1: f64,
    pub omega_c2: f64,
    pub g12: f64,
}

/// Frequencies are absolute (`ω0 + shift`), couplings in the same units as `gamma`.
pub fn effective_params_1q(s: &PhaseSettings1Q, gamma: f64, omega0: f64) -> Result<EffectiveParams1Q> {
    let p = s.theta_p();
    Ok(EffectiveParams1Q {
        omega_c1: omega0 + gamma * chi(s.theta_m1, 2.0 * s.theta_12 + s.theta_m2, p)?,
        omega_c2: omega0 + gamma * chi(s.theta_m2, 2.0 * s.theta_12 + s.theta_m1, p)?,
        g12: gamma * chi(s.theta_m1, s.theta_m2, p)?,
    })
}

/// Phases of the two-qubit network: waveguide 1 (M3, c3, c4, QD, My) and
/// waveguide 2 (Mx, QD, c5, c6, M6).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSettings2Q {
    pub theta_m3: f64,
    pub theta_34: f64,
    pub theta_4y: f64,
    pub theta_my: f64,
    pub theta_mx: f64,
    pub theta_5x: f64,
    pub theta_56: f64,
    pub theta_m6: f64,
}

impl PhaseSettings2Q {
    pub const NAMES: [&'static str; 8] = ["M3", "34", "4y", "My", "Mx", "5x", "56", "M6"];

    pub fn from_array(a: [f64; 8]) -> Result<Self> {
        if let Some(v) = a.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("phase {v} is not finite")));
        }
        Ok(Self::from_array_unchecked(a))
    }

    pub(crate) fn from_array_unchecked(a: [f64; 8]) -> Self {
        Self {
            theta_m3: a[0],
            theta_34: a[1],
            theta_4y: a[2],
            theta_my: a[3],
            theta_mx: a[4],
            theta_5x: a[5],
            theta_56: a[6],
            theta_m6: a[7],
        }
    }

    pub fn as_array(&self) -> [f64; 8] {
        [
            self.theta_m3,
            self.theta_34,
            self.theta_4y,
            self.theta_my,
            self.theta_mx,
            self.theta_5x,
            self.theta_56,
            self.theta_m6,
        ]
    }

    pub fn theta_p1(&self) -> f64 {
        dot(&P1, &self.as_array())
    }

    pub fn theta_p2(&self) -> f64 {
        dot(&P2, &self.as_array())
    }

    /// Smallest `|sin(θ_P/2)|` over both waveguides.
    pub fn singularity_margin(&self) -> f64 {
        (0.5 * self.theta_p1()).sin().abs().min((0.5 * self.theta_p2()).sin().abs())
    }
}

/// Named two-qubit settings: the q-CNOT steps, the photon-feeding pair and hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting2Q {
    A,
    B,
    C,
    D,
    FeedRabi,
    FeedPhase,
    Hold,
}

impl Setting2Q {
    pub const ALL: [Setting2Q; 7] = [
        Setting2Q::A,
        Setting2Q::B,
        Setting2Q::C,
        Setting2Q::D,
        Setting2Q::FeedRabi,
        Setting2Q::FeedPhase,
        Setting2Q::Hold,
    ];

    pub fn settings(self) -> PhaseSettings2Q {
        let a = match self {
            Setting2Q::A | Setting2Q::C => [PI, FRAC_PI_2, 0.0, PI, FRAC_PI_2, PI, -FRAC_PI_4, PI],
            Setting2Q::B => [FRAC_PI_2, 0.0, PI, FRAC_PI_2, PI, 0.0, FRAC_PI_2, PI],
            Setting2Q::D => [PI, FRAC_PI_2, 0.0, PI, PI, 0.0, 1.25 * PI, -FRAC_PI_2],
            Setting2Q::FeedRabi => [FRAC_PI_2, PI, -FRAC_PI_4, PI, PI, 0.0, FRAC_PI_2, PI],
            Setting2Q::FeedPhase => [-FRAC_PI_2, 1.25 * PI, 0.0, PI, PI, 0.0, FRAC_PI_2, PI],
            Setting2Q::Hold => [PI, FRAC_PI_2, 0.0, PI, PI, 0.0, FRAC_PI_2, PI],
        };
        PhaseSettings2Q::from_array_unchecked(a)
    }

    /// Step duration in `1/Γ` for the gate steps.
    pub fn duration(self) -> Option<f64> {
        match self {
            Setting2Q::A | Setting2Q::C => Some(FRAC_PI_4),
            Setting2Q::B | Setting2Q::D => Some(FRAC_PI_2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Setting2Q::A => "A",
            Setting2Q::B => "B",
            Setting2Q::C => "C",
            Setting2Q::D => "D",
            Setting2Q::FeedRabi => "feed-rabi",
            Setting2Q::FeedPhase => "feed-phase",
            Setting2Q::Hold => "hold",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(s))
    }
}

/// Effective parameters of the two-qubit network. `omega_*` are absolute
/// frequencies, `g_*` couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams2Q {
    pub omega_c3: f64,
    pub omega_c4: f64,
    pub omega_c5: f64,
    pub omega_c6: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub g34: f64,
    pub gy3: f64,
    pub gy4: f64,
    pub g56: f64,
    pub gx5: f64,
    pub gx6: f64,
}

impl EffectiveParams2Q {
    pub const NAMES: [&'static str; 12] = ["c3", "c4", "c5", "c6", "x", "y", "g34", "gy3", "gy4", "g56", "gx5", "gx6"];

    pub fn as_array(&self) -> [f64; 12] {
        [
            self.omega_c3,
            self.omega_c4,
            self.omega_c5,
            self.omega_c6,
            self.omega_x,
            self.omega_y,
            self.g34,
            self.gy3,
            self.gy4,
            self.g56,
            self.gx5,
            self.gx6,
        ]
    }

    pub fn from_array(a: [f64; 12]) -> Self {
        Self {
            omega_c3: a[0],
            omega_c4: a[1],
            omega_c5: a[2],
            omega_c6: a[3],
            omega_x: a[4],
            omega_y: a[5],
            g34: a[6],
            gy3: a[7],
            gy4: a[8],
            g56: a[9],
            gx5: a[10],
            gx6: a[11],
        }
    }
}

/// Which effective fields a target constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamMask(pub [bool; 12]);

impl ParamMask {
    pub fn all() -> Self {
        Self([true; 12])
    }

    /// Constrain only the named fields (names as in [`EffectiveParams2Q::NAMES`]).
    pub fn only(names: &[&str]) -> Result<Self> {
        let mut m = [false; 12];
        for n in names {
            let i = EffectiveParams2Q::NAMES
                .iter()
                .position(|k| k == n)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown effective field `{n}`")))?;
            m[i] = true;
        }
        Ok(Self(m))
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }
}

const P1: [f64; 8] = [1.0, 2.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0];
const P2: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 2.0, 1.0];

/// One row of the phase table: `prefactor·χ(x·θ, y·θ, P·θ)`.
struct Entry {
    prefactor: f64,
    x: [f64; 8],
    y: [f64; 8],
    p: &'static [f64; 8],
}

//                   M3   34   4y   My   Mx   5x   56   M6
const TABLE: [Entry; 12] = [
    Entry { prefactor: 1.0, x: [1., 0., 0., 0., 0., 0., 0., 0.], y: [0., 2., 2., 1., 0., 0., 0., 0.], p: &P1 },
    Entry { prefactor: 1.0, x: [1., 2., 0., 0., 0., 0., 0., 0.], y: [0., 0., 2., 1., 0., 0., 0., 0.], p: &P1 },
    Entry { prefactor: 2.0, x: [0., 0., 0., 0., 0., 0., 2., 1.], y: [0., 0., 0., 0., 1., 2., 0., 0.], p: &P2 },
    Entry { prefactor: 2.0, x: [0., 0., 0., 0., 0., 0., 0., 1.], y: [0., 0., 0., 0., 1., 2., 2., 0.], p: &P2 },
    Entry { prefactor: 2.0, x: [0., 0., 0., 0., 0., 2., 2., 1.], y: [0., 0., 0., 0., 1., 0., 0., 0.], p: &P2 },
    Entry { prefactor: 2.0, x: [1., 2., 2., 0., 0., 0., 0., 0.], y: [0., 0., 0., 1., 0., 0., 0., 0.], p: &P1 },
    Entry { prefactor: 1.0, x: [1., 0., 0., 0., 0., 0., 0., 0.], y: [0., 0., 2., 1., 0., 0., 0., 0.], p: &P1 },
    Entry { prefactor: SQRT_2, x: [1., 0., 0., 0., 0., 0., 0., 0.], y: [0., 0., 0., 1., 0., 0., 0., 0.], p: &P1 },
    Entry { prefactor: SQRT_2, x: [1., 2., 0., 0., 0., 0., 0., 0.], y: [0., 0., 0., 1., 0., 0., 0., 0.], p: &P1 },
    Entry { prefactor: 2.0, x: [0., 0., 0., 0., 0., 0., 0., 1.], y: [0., 0., 0., 0., 1., 2., 0., 0.], p: &P2 },
    Entry { prefactor: 2.0, x: [0., 0., 0., 0., 0., 0., 2., 1.], y: [0., 0., 0., 0., 1., 0., 0., 0.], p: &P2 },
    Entry { prefactor: 2.0, x: [0., 0., 0., 0., 0., 0., 0., 1.], y: [0., 0., 0., 0., 1., 0., 0., 0.], p: &P2 },
];

fn dot(c: &[f64; 8], th: &[f64; 8]) -> f64 {
    c.iter().zip(th).map(|(a, b)| a * b).sum()
}

/// Effective parameters in natural units (`Γ = 1`, `ω0 = 0`).
pub(crate) fn effective_2q_natural(th: &[f64; 8]) -> Result<[f64; 12]> {
    let mut out = [0.0; 12];
    for (o, e) in out.iter_mut().zip(&TABLE) {
        *o = e.prefactor * chi(dot(&e.x, th), dot(&e.y, th), dot(e.p, th))?;
    }
    Ok(out)
}

/// Values and Jacobian `∂value_i/∂θ_j` in natural units.
pub(crate) fn effective_2q_jacobian(th: &[f64; 8]) -> Result<([f64; 12], [[f64; 8]; 12])> {
    let mut val = [0.0; 12];
    let mut jac = [[0.0; 8]; 12];
    for (i, e) in TABLE.iter().enumerate() {
        let (v, [dx, dy, dz]) = chi_with_gradient(dot(&e.x, th), dot(&e.y, th), dot(e.p, th))?;
        val[i] = e.prefactor * v;
        for (j, d) in jac[i].iter_mut().enumerate() {
            *d = e.prefactor * (dx * e.x[j] + dy * e.y[j] + dz * e.p[j]);
        }
    }
    Ok((val, jac))
}

pub fn effective_params_2q(s: &PhaseSettings2Q, gamma: f64, omega0: f64) -> Result<EffectiveParams2Q> {
    let mut v = effective_2q_natural(&s.as_array())?;
    for (i, x) in v.iter_mut().enumerate() {
        *x *= gamma;
        if i < 6 {
            *x += omega0;
        }
    }
    Ok(EffectiveParams2Q::from_array(v))
}
