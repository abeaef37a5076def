//! Two identical particles in symmetrized or antisymmetrized Gaussian
//! packets: pair energy, correlation energy and the Fermi overlap penalty.
//!
//! Packets of width `σ` sit at `∓d/2` with zero mean momentum. Their overlap
//! is `s = exp(−d²/(4σ²))` and, for one-particle kinetic energy `T`,
//!
//! * bosons: `E = (2 T₀₀ + 2 Re(T_ab s)) / (1 + s²)`,
//! * fermions: `E = T_aa + T_⊥⊥` with `b⊥ = (b − s a)/sqrt(1 − s²)`.
//!
//! The fermion form never divides by a vanishing norm: at `d = 0` the
//! orthogonalized orbital is the first displaced number state. Energies are
//! kinetic, i.e. the rest energy is subtracted.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MomentumGrid;
use crate::units::UnitSystem;

type C = Complex64;

/// Nodes of the momentum quadrature.
pub const QUADRATURE_NODES: usize = 4096;

/// Half-width of the momentum quadrature in units of `ħ/σ`.
pub const QUADRATURE_WIDTH: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistics {
    Bose,
    Fermi,
}

/// One-particle kinetic energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kinematics {
    /// `p²/(2m)`.
    NonRelativistic,
    /// `E(p) − mc²`.
    Relativistic,
}

impl Kinematics {
    pub fn kinetic(self, units: &UnitSystem, p: f64) -> f64 {
        match self {
            Kinematics::NonRelativistic => p * p / (2.0 * units.mass),
            Kinematics::Relativistic => {
                let cp2 = units.c * units.c * p * p;
                cp2 / (units.energy(p) + units.rest_energy())
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Kinematics::NonRelativistic => "nonrel",
            Kinematics::Relativistic => "rel",
        }
    }
}

/// Two packets of common width at `∓separation/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairState {
    pub sigma: f64,
    pub separation: f64,
    pub statistics: Statistics,
    pub units: UnitSystem,
}

impl PairState {
    pub fn new(sigma: f64, separation: f64, statistics: Statistics, units: UnitSystem) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("packet width must be positive, got {sigma}")));
        }
        if !separation.is_finite() {
            return Err(Error::domain(format!("separation must be finite, got {separation}")));
        }
        Ok(Self {
            sigma,
            separation,
            statistics,
            units,
        })
    }

    /// `⟨a|b⟩ = exp(−d²/(4σ²))`.
    pub fn overlap(&self) -> f64 {
        (-self.separation.powi(2) / (4.0 * self.sigma * self.sigma)).exp()
    }

    /// Quadrature grid used for the energy integrals.
    pub fn grid(&self) -> Result<MomentumGrid> {
        MomentumGrid::new(QUADRATURE_NODES, QUADRATURE_WIDTH * self.units.hbar / self.sigma)
    }

    fn envelope(&self, p: f64) -> f64 {
        let h = self.units.hbar;
        let x = self.sigma * p / h;
        (self.sigma / h).sqrt() / PI.powf(0.25) * (-0.5 * x * x).exp()
    }

    /// Orbitals `a` (centre `−d/2`) and `b` (centre `+d/2`) on `grid`.
    pub fn orbitals(&self, grid: &MomentumGrid) -> (Vec<C>, Vec<C>) {
        let h = self.units.hbar;
        let half = 0.5 * self.separation;
        grid.nodes()
            .iter()
            .map(|&p| {
                let g = self.envelope(p);
                (C::from_polar(g, half * p / h), C::from_polar(g, -half * p / h))
            })
            .unzip()
    }

    /// `(b − s a)/sqrt(1 − s²)`, evaluated as
    /// `g (−2i sin θ + (1 − s) e^{iθ}) / sqrt(1 − s²)` with `θ = d p/(2ħ)`,
    /// and as `−i sqrt(2) (σ/ħ) p g` at `d = 0`.
    pub fn orthogonalized_partner(&self, grid: &MomentumGrid) -> Vec<C> {
        let h = self.units.hbar;
        let d = self.separation;
        let ratio = d * d / (4.0 * self.sigma * self.sigma);
        let one_minus_s = -(-ratio).exp_m1();
        let norm = (-(-2.0 * ratio).exp_m1()).sqrt();
        grid.nodes()
            .iter()
            .map(|&p| {
                let g = self.envelope(p);
                if d == 0.0 {
                    C::new(0.0, -(2f64.sqrt()) * self.sigma * p / h * g)
                } else {
                    let theta = d * p / (2.0 * h);
                    let v = C::new(0.0, -2.0 * theta.sin()) + C::from_polar(one_minus_s, theta);
                    v * (g / norm)
                }
            })
            .collect()
    }

    /// Two-particle amplitude `a(p1) b(p2) ± b(p1) a(p2)` (unnormalized),
    /// rows indexed by `p1`. Intended for brute-force checks on small grids.
    pub fn amplitude(&self, grid: &MomentumGrid) -> Vec<Vec<C>> {
        let (a, b) = self.orbitals(grid);
        let sign = match self.statistics {
            Statistics::Bose => 1.0,
            Statistics::Fermi => -1.0,
        };
        (0..grid.len())
            .map(|i| (0..grid.len()).map(|j| a[i] * b[j] + b[i] * a[j] * sign).collect())
            .collect()
    }
}

fn matrix_element(grid: &MomentumGrid, t: &[f64], x: &[C], y: &[C]) -> Result<C> {
    let v: Vec<C> = x.iter().zip(y).zip(t).map(|((a, b), t)| a.conj() * b * *t).collect();
    grid.integrate(&v)
}

/// Kinetic energy of the pair (rest energy subtracted).
pub fn pair_energy(pair: &PairState, kinematics: Kinematics) -> Result<f64> {
    let grid = pair.grid()?;
    let t: Vec<f64> = grid.nodes().iter().map(|&p| kinematics.kinetic(&pair.units, p)).collect();
    let (a, b) = pair.orbitals(&grid);
    let t00 = matrix_element(&grid, &t, &a, &a)?.re;
    match pair.statistics {
        Statistics::Bose => {
            let s = pair.overlap();
            let tab = matrix_element(&grid, &t, &a, &b)?;
            Ok((2.0 * t00 + 2.0 * (tab * s).re) / (1.0 + s * s))
        }
        Statistics::Fermi => {
            let perp = pair.orthogonalized_partner(&grid);
            let tpp = matrix_element(&grid, &t, &perp, &perp)?.re;
            Ok(t00 + tpp)
        }
    }
}

/// Single-packet kinetic energy `T₀₀`.
pub fn packet_energy(sigma: f64, kinematics: Kinematics, units: &UnitSystem) -> Result<f64> {
    let pair = PairState::new(sigma, 0.0, Statistics::Bose, *units)?;
    let grid = pair.grid()?;
    let t: Vec<f64> = grid.nodes().iter().map(|&p| kinematics.kinetic(units, p)).collect();
    let (a, _) = pair.orbitals(&grid);
    Ok(matrix_element(&grid, &t, &a, &a)?.re)
}

/// `pair_energy − 2 T₀₀`: the part of the energy due to (anti)symmetrization.
pub fn correlation_energy(pair: &PairState, kinematics: Kinematics) -> Result<f64> {
    Ok(pair_energy(pair, kinematics)? - 2.0 * packet_energy(pair.sigma, kinematics, &pair.units)?)
}

/// Energy cost of bringing two fermion packets to the same point:
/// `E(d = 0) − E(d → ∞) = T₁₁ − T₀₀`.
pub fn overlap_penalty(sigma: f64, kinematics: Kinematics, units: &UnitSystem) -> Result<f64> {
    let pair = PairState::new(sigma, 0.0, Statistics::Fermi, *units)?;
    let grid = pair.grid()?;
    let t: Vec<f64> = grid.nodes().iter().map(|&p| kinematics.kinetic(units, p)).collect();
    let (a, _) = pair.orbitals(&grid);
    let perp = pair.orthogonalized_partner(&grid);
    Ok(matrix_element(&grid, &t, &perp, &perp)?.re - matrix_element(&grid, &t, &a, &a)?.re)
}

/// Penalty per width for each requested kinematics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyCurve {
    pub kinds: Vec<Kinematics>,
    pub sigmas: Vec<f64>,
    /// `values[i][k]`: width `i`, kinematics `k`.
    pub values: Vec<Vec<f64>>,
}

impl PenaltyCurve {
    pub fn column(&self, kind: Kinematics) -> Option<Vec<f64>> {
        let k = self.kinds.iter().position(|&x| x == kind)?;
        Some(self.values.iter().map(|row| row[k]).collect())
    }

    /// CSV with `#` metadata lines, columns `sigma` and one per kinematics.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[(&str, String)]) -> Result<()> {
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        let head: Vec<&str> = self.kinds.iter().map(|k| k.label()).collect();
        writeln!(w, "sigma,{}", head.join(","))?;
        for (s, row) in self.sigmas.iter().zip(&self.values) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{s:.17e},{}", cells.join(","))?;
        }
        Ok(())
    }
}

pub fn penalty_curve(sigmas: &[f64], kinds: &[Kinematics], units: &UnitSystem) -> Result<PenaltyCurve> {
    if kinds.is_empty() {
        return Err(Error::config("penalty curve needs at least one kinematics"));
    }
    let values = sigmas
        .par_iter()
        .map(|&s| kinds.iter().map(|&k| overlap_penalty(s, k, units)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(PenaltyCurve {
        kinds: kinds.to_vec(),
        sigmas: sigmas.to_vec(),
        values,
    })
}
