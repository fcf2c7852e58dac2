//! Physical constants and unit conversions.
//!
//! Internal units are SI throughout the crate; peV, µm, and cm appear only
//! at I/O boundaries. Defaults are CODATA 2018 values.

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Neutron mass, kg (CODATA 2018).
pub const NEUTRON_MASS: f64 = 1.674_927_498e-27;

/// Standard gravitational acceleration, m/s².
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// One picoelectronvolt in joules (exact, via the 2019 SI elementary charge).
pub const JOULE_PER_PEV: f64 = 1.602_176_634e-31;

/// One micrometre in metres.
pub const METER_PER_UM: f64 = 1e-6;

/// Constants entering the Hamiltonian.
///
/// All fields are strictly positive; the derived gravitational energy scale
/// is recomputed on demand rather than stored, so it can never go stale.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Particle mass, kg.
    pub mass: f64,
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Conversion factor, peV per joule.
    pub pev_per_joule: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            hbar: HBAR,
            mass: NEUTRON_MASS,
            g: STANDARD_GRAVITY,
            pev_per_joule: 1.0 / JOULE_PER_PEV,
        }
    }
}

impl PhysicalConstants {
    /// Neutron in the Earth's field, CODATA values.
    pub fn neutron() -> Self {
        Self::default()
    }

    /// Custom constants; every field must be finite and strictly positive.
    pub fn new(hbar: f64, mass: f64, g: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass), ("g", g)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(
                    "constants",
                    format!("{name} must be finite and > 0, got {v:e}"),
                ));
            }
        }
        Ok(PhysicalConstants {
            hbar,
            mass,
            g,
            pev_per_joule: 1.0 / JOULE_PER_PEV,
        })
    }

    /// Gravitational energy scale (ħ²·m·g²/2)^(1/3), J.
    pub fn eps0(&self) -> f64 {
        (self.hbar * self.hbar * self.mass * self.g * self.g / 2.0).cbrt()
    }

    /// Convert joules to picoelectronvolts.
    pub fn to_pev(&self, e_joule: f64) -> f64 {
        e_joule * self.pev_per_joule
    }

    /// Convert picoelectronvolts to joules.
    pub fn from_pev(&self, e_pev: f64) -> f64 {
        e_pev / self.pev_per_joule
    }

    /// Classical height E/(m·g) at which a particle of energy `e_joule`
    /// (measured from the mirror) turns around.
    pub fn turning_height(&self, e_joule: f64) -> f64 {
        e_joule / (self.mass * self.g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eps0_matches_direct_arithmetic() {
        let c = PhysicalConstants::neutron();
        // (ħ²·m·g²/2)^(1/3) with CODATA inputs, evaluated independently
        // at 30 significant digits: 9.63947163917661e-32 J.
        assert_relative_eq!(c.eps0(), 9.63947163917661e-32, max_relative = 1e-12);
        // coarse sanity figure: 9.64e-32 J within 0.5%
        assert!((c.eps0() - 9.64e-32).abs() / 9.64e-32 < 5e-3);
        // in peV: about 0.602
        assert_relative_eq!(c.to_pev(c.eps0()), 0.601648497089280, max_relative = 1e-12);
    }

    #[test]
    fn pev_round_trip() {
        let c = PhysicalConstants::neutron();
        assert_eq!(c.to_pev(0.0), 0.0);
        assert_relative_eq!(c.to_pev(1.602176634e-31), 1.0, max_relative = 1e-14);
        for &x in &[1.41, 0.909, 4.08, 1e-9, 7.3e4] {
            assert_relative_eq!(c.to_pev(c.from_pev(x)), x, max_relative = 1e-14);
        }
    }

    #[test]
    fn rejects_non_positive_fields() {
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -2.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn all_default_fields_positive() {
        let c = PhysicalConstants::neutron();
        for v in [c.hbar, c.mass, c.g, c.pev_per_joule, c.eps0()] {
            assert!(v.is_finite() && v > 0.0);
        }
    }
}
