//! Phase-controlled photonic cavities coupled to a three-level quantum dot.
//!
//! Cavities sit on waveguides terminated by phase-shifting mirrors. Once the
//! waveguide modes are adiabatically eliminated, the mirror and propagation
//! phases set every cavity frequency and coupling. This crate maps phases to
//! effective parameters and back, evolves the resulting gate protocols with and
//! without decoherence, and checks the effective picture against an explicit
//! multimode model and a delay-line coupled-mode simulation.
//!
//! Units: times in `1/Γ`, rates and frequencies in `Γ`, frame rotating at the
//! quantum-dot transition frequency. [`units`] converts to SI.

pub mod cmt;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod full_model;
pub mod hilbert;
mod linalg;
mod ode;
pub mod open_system;
pub mod phase;
pub mod units;

pub use error::{Error, Result};
pub use hilbert::{DensityMatrix, HilbertSpec, LinearOperator, QdLevel, Space, StateVector};
pub use num_complex::Complex64;
pub use phase::{
    EffectiveParams1Q, EffectiveParams2Q, ParamMask, PhaseSettings1Q, PhaseSettings2Q, Setting1Q, Setting2Q,
};
