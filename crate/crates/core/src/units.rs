//! Physical constants used throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass, speed of light and reduced Planck constant.
///
/// Defaults to natural units `m = c = ħ = 1`, where the Compton wavelength is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub mass: f64,
    pub c: f64,
    pub hbar: f64,
}

impl UnitSystem {
    pub fn new(mass: f64, c: f64, hbar: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("c", c), ("hbar", hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { mass, c, hbar })
    }

    pub const fn natural() -> Self {
        Self {
            mass: 1.0,
            c: 1.0,
            hbar: 1.0,
        }
    }

    /// Same constants with a different ħ (used for classical-limit sweeps).
    pub fn with_hbar(self, hbar: f64) -> Result<Self> {
        Self::new(self.mass, self.c, hbar)
    }

    /// `ħ / (m c)`.
    pub fn compton_length(&self) -> f64 {
        self.hbar / (self.mass * self.c)
    }

    /// `m c²`.
    pub fn rest_energy(&self) -> f64 {
        self.mass * self.c * self.c
    }

    /// `m c`.
    pub fn momentum_scale(&self) -> f64 {
        self.mass * self.c
    }

    /// Free dispersion `E(p) = sqrt(m²c⁴ + c²p²)`.
    pub fn energy(&self, p: f64) -> f64 {
        let mc2 = self.rest_energy();
        (self.c * p).hypot(mc2)
    }

    /// Group velocity `c² p / E(p)`.
    pub fn velocity(&self, p: f64) -> f64 {
        self.c * self.c * p / self.energy(p)
    }

    /// Position width of a packet with localization `λ = λ_c / σ`.
    pub fn width_for_localization(&self, lambda: f64) -> Result<f64> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::domain(format!("localization must be positive, got {lambda}")));
        }
        Ok(self.compton_length() / lambda)
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::natural()
    }
}
