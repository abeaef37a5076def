//! Relativistic dispersion, the interference factors ε and χ, Landau levels
//! and the deformation function of the magnetic ladder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::UnitSystem;

/// External field acting on the particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FieldKind {
    Free,
    /// Uniform magnetic field, `b` the dimensionless field strength
    /// (`ħ ω_c / (m c²)` with `ω_c` the cyclotron frequency).
    Landau { b: f64 },
}

/// `ε = (E1 + E2) / (2 sqrt(E1 E2))`.
pub fn eps_from_energies(e1: f64, e2: f64) -> f64 {
    (e1 + e2) / (2.0 * (e1 * e2).sqrt())
}

/// `χ = (E1 - E2) / (2 sqrt(E1 E2))`.
pub fn chi_from_energies(e1: f64, e2: f64) -> f64 {
    (e1 - e2) / (2.0 * (e1 * e2).sqrt())
}

/// Energy model: units plus field configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub units: UnitSystem,
    pub kind: FieldKind,
}

impl EnergyModel {
    pub fn free(units: UnitSystem) -> Self {
        Self {
            units,
            kind: FieldKind::Free,
        }
    }

    pub fn landau(units: UnitSystem, b: f64) -> Result<Self> {
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::domain(format!("field strength must be non-negative, got {b}")));
        }
        Ok(Self {
            units,
            kind: FieldKind::Landau { b },
        })
    }

    /// Dimensionless field strength (0 for a free particle).
    pub fn b(&self) -> f64 {
        match self.kind {
            FieldKind::Free => 0.0,
            FieldKind::Landau { b } => b,
        }
    }

    /// Free dispersion `E(p)`.
    pub fn energy(&self, p: f64) -> f64 {
        self.units.energy(p)
    }

    /// `ε(p1, p2)`; equals `cosh(θ1 - θ2)` with `θ = ½ ln(E/mc²)`.
    pub fn eps_factor(&self, p1: f64, p2: f64) -> f64 {
        eps_from_energies(self.energy(p1), self.energy(p2))
    }

    /// `χ(p1, p2)`; equals `sinh(θ1 - θ2)`, antisymmetric.
    pub fn chi_factor(&self, p1: f64, p2: f64) -> f64 {
        chi_from_energies(self.energy(p1), self.energy(p2))
    }

    /// Mixed derivative `∂²/∂p1∂p2 ln ε(p1, p2)` in closed form:
    /// `-c⁴ p1 p2 / (E1 E2 (E1 + E2)²)`.
    pub fn purity_rhs(&self, p1: f64, p2: f64) -> f64 {
        let (e1, e2) = (self.energy(p1), self.energy(p2));
        let c4 = self.units.c.powi(4);
        -c4 * p1 * p2 / (e1 * e2 * (e1 + e2).powi(2))
    }

    /// Landau level `E_n(p_z) = mc² sqrt(1 + (p_z/mc)² + (2n+1) b)`.
    pub fn landau_energy(&self, n: usize, p_z: f64) -> f64 {
        let mc2 = self.units.rest_energy();
        let x = p_z / self.units.momentum_scale();
        mc2 * (1.0 + x * x + (2 * n + 1) as f64 * self.b()).sqrt()
    }

    /// `E_{n+1} - E_n`, evaluated without cancellation.
    pub fn landau_spacing(&self, n: usize, p_z: f64) -> f64 {
        let mc2 = self.units.rest_energy();
        2.0 * self.b() * mc2 * mc2 / (self.landau_energy(n + 1, p_z) + self.landau_energy(n, p_z))
    }

    /// Deformation `f(n) = ε(E_{n-1}, E_n)` at `p_z = 0`; defined for `n >= 1`.
    pub fn deformation_f(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::domain("deformation function is defined for n >= 1"));
        }
        Ok(self.level_eps(n - 1, n))
    }

    /// `ε(E_m, E_n)` between Landau levels, accurate when `b` is tiny.
    ///
    /// Uses `ε = sqrt(1 + χ²)` with `χ = (E_n - E_m)/(2 sqrt(E_m E_n))` and the
    /// differences formed from `E_n² - E_m² = 2 (n - m) b m²c⁴`.
    pub fn level_eps(&self, m: usize, n: usize) -> f64 {
        let chi = self.level_chi(m, n);
        (1.0 + chi * chi).sqrt()
    }

    /// `χ(E_m, E_n)` between Landau levels (`p_z = 0`).
    pub fn level_chi(&self, m: usize, n: usize) -> f64 {
        let (em, en) = (self.landau_energy(m, 0.0), self.landau_energy(n, 0.0));
        let mc2 = self.units.rest_energy();
        let diff = 2.0 * (m as f64 - n as f64) * self.b() * mc2 * mc2 / (em + en);
        diff / (2.0 * (em * en).sqrt())
    }

    /// `f(1) f(2) ... f(n)`, with the empty product 1.
    pub fn deformed_factorial(&self, n: usize) -> f64 {
        (1..=n).map(|k| self.level_eps(k - 1, k)).product()
    }

    /// Cyclotron angular frequency `b mc²/ħ`.
    pub fn cyclotron_frequency(&self) -> f64 {
        self.b() * self.units.rest_energy() / self.units.hbar
    }

    /// Magnetic length `λ_c / sqrt(b)`.
    pub fn magnetic_length(&self) -> Result<f64> {
        if self.b() <= 0.0 {
            return Err(Error::domain("magnetic length needs b > 0"));
        }
        Ok(self.units.compton_length() / self.b().sqrt())
    }
}
