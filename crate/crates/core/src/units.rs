//! Conversions between natural units (`Γ = 1`) and SI.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Reduced Planck constant in eV·s.
pub const HBAR_EV_S: f64 = 6.582119569e-16;
/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Telecom wavelength used for the default optical frequency.
pub const DEFAULT_WAVELENGTH_M: f64 = 1.55e-6;

/// Anchors natural units to SI through the cavity-waveguide coupling `Γ` (s⁻¹).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub gamma_si: f64,
}

impl Units {
    pub fn new(gamma_si: f64) -> Result<Self> {
        if !(gamma_si.is_finite() && gamma_si > 0.0) {
            return Err(Error::InvalidParameter(format!("Gamma must be positive, got {gamma_si}")));
        }
        Ok(Self { gamma_si })
    }

    /// Builds units from the lifetime `1/(4Γ)` quoted in picoseconds.
    pub fn from_quarter_lifetime_ps(ps: f64) -> Result<Self> {
        if !(ps.is_finite() && ps > 0.0) {
            return Err(Error::InvalidParameter(format!("1/(4 Gamma) must be positive, got {ps} ps")));
        }
        Self::new(1.0 / (4.0 * ps * 1e-12))
    }

    pub fn quarter_lifetime_ps(&self) -> f64 {
        1e12 / (4.0 * self.gamma_si)
    }

    pub fn time_to_si(&self, t: f64) -> f64 {
        t / self.gamma_si
    }

    pub fn time_from_si(&self, t_si: f64) -> f64 {
        t_si * self.gamma_si
    }

    pub fn rate_to_si(&self, r: f64) -> f64 {
        r * self.gamma_si
    }

    pub fn rate_from_si(&self, r_si: f64) -> f64 {
        r_si / self.gamma_si
    }
}

/// Pure-dephasing rate (rad/s) from the linewidth `2ħγ` in µeV.
pub fn dephasing_rate_from_linewidth_uev(linewidth_uev: f64) -> f64 {
    linewidth_uev * 1e-6 / (2.0 * HBAR_EV_S)
}

/// Linewidth `2ħγ` in µeV from a pure-dephasing rate (rad/s).
pub fn linewidth_uev_from_dephasing_rate(gamma_phase: f64) -> f64 {
    2.0 * HBAR_EV_S * gamma_phase * 1e6
}

pub fn angular_frequency_from_wavelength(wavelength_m: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength_m
}

/// Energy decay rate `ω0/Q`; infinite Q gives zero.
pub fn cavity_loss_rate(omega0_si: f64, q_factor: f64) -> f64 {
    if q_factor.is_infinite() {
        0.0
    } else {
        omega0_si / q_factor
    }
}

/// Duration of the three-step q-CNOT (`π/Γ`) in picoseconds.
pub fn qcnot_gate_time_ps(units: &Units) -> f64 {
    units.time_to_si(PI) * 1e12
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_lifetime_round_trip() {
        let u = Units::from_quarter_lifetime_ps(38.5).unwrap();
        assert!((u.quarter_lifetime_ps() - 38.5).abs() < 1e-12);
        assert!((u.gamma_si - 6.493_506_493_506_494e9).abs() < 1.0);
    }

    #[test]
    fn gate_time_is_pi_over_gamma() {
        let u = Units::from_quarter_lifetime_ps(38.5).unwrap();
        // 4 * 38.5 ps * pi
        assert!((qcnot_gate_time_ps(&u) - 483.805_268_652_828_3).abs() < 1e-6);
    }

    #[test]
    fn linewidth_conversion_inverts() {
        let g = dephasing_rate_from_linewidth_uev(2.0);
        assert!((g - 1.519_267_5e9).abs() < 1e4);
        assert!((linewidth_uev_from_dephasing_rate(g) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn telecom_frequency() {
        let w = angular_frequency_from_wavelength(DEFAULT_WAVELENGTH_M);
        assert!((w - 1.215_259e15).abs() < 1e10);
        assert_eq!(cavity_loss_rate(w, f64::INFINITY), 0.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(Units::new(0.0).is_err());
        assert!(Units::from_quarter_lifetime_ps(-1.0).is_err());
    }
}
