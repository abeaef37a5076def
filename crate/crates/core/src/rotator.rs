//! Charged particle in a uniform magnetic field: the even (deformed) ladder
//! algebra, nonlinear coherent dynamics and the orbit-radius time series.
//!
//! The orbit radius is the centroid distance from the guiding centre,
//! `r(t) = √2 ℓ |⟨A(t)⟩|` with `ℓ = sqrt(ħ/(mω))` and `A` the even part of
//! the transverse annihilation operator. With equally spaced levels `r` is
//! constant; the relativistic spacing `E_{n+1} − E_n` shrinks with `n` and
//! makes `r(t)` beat slowly.
//!
//! "Damping" below is the Gaussian decay of the first collapse of `r(t)`,
//! not dissipation.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fv::{
    build_hamiltonian, charge_expectation, even_part, ladder_operator, longitudinal_position, sign_operator,
    BasisSpec, EnergyFrame, OperatorMatrix,
};
use crate::grid::{spectral_derivative_matrix, MomentumGrid};
use crate::spectral::{eps_from_energies, EnergyModel};
use crate::states::FockExpansion;
use crate::units::UnitSystem;

type C = Complex64;

/// Largest joint oscillator ⊗ p_z dimension accepted by the coupling measurement.
pub const MAX_JOINT_DIM: usize = 2048;

/// Level structure used for the phases of a time series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spectrum {
    /// Landau levels `E_n = mc² sqrt(1 + (2n+1) b)`.
    Relativistic,
    /// Reference `E_n = mc² + ħω (n + ½)`.
    EquallySpaced,
}

/// Rotator in a field of dimensionless strength `b`, truncated to `levels`
/// transverse levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatorModel {
    model: EnergyModel,
    levels: usize,
}

impl RotatorModel {
    pub fn new(units: UnitSystem, b: f64, levels: usize) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::domain(format!("rotator needs b > 0, got {b}")));
        }
        if levels < 2 {
            return Err(Error::resolution("rotator needs at least 2 levels", Some(2)));
        }
        Ok(Self {
            model: EnergyModel::landau(units, b)?,
            levels,
        })
    }

    pub fn energy_model(&self) -> &EnergyModel {
        &self.model
    }

    pub fn units(&self) -> &UnitSystem {
        &self.model.units
    }

    pub fn b(&self) -> f64 {
        self.model.b()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn basis(&self) -> BasisSpec {
        BasisSpec::Oscillator { levels: self.levels }
    }

    /// Cyclotron angular frequency `ω = b mc²/ħ`.
    pub fn cyclotron_frequency(&self) -> f64 {
        self.model.cyclotron_frequency()
    }

    /// Ladder length `ℓ = sqrt(ħ/(mω))`.
    pub fn ladder_length(&self) -> f64 {
        let u = self.units();
        (u.hbar / (u.mass * self.cyclotron_frequency())).sqrt()
    }

    pub fn level_energy(&self, n: usize, spectrum: Spectrum) -> f64 {
        match spectrum {
            Spectrum::Relativistic => self.model.landau_energy(n, 0.0),
            Spectrum::EquallySpaced => {
                self.units().rest_energy() + self.units().hbar * self.cyclotron_frequency() * (n as f64 + 0.5)
            }
        }
    }

    /// `E_{n+1} − E_n`.
    pub fn spacing(&self, n: usize, spectrum: Spectrum) -> f64 {
        match spectrum {
            Spectrum::Relativistic => self.model.landau_spacing(n, 0.0),
            Spectrum::EquallySpaced => self.units().hbar * self.cyclotron_frequency(),
        }
    }

    /// `⟨n|A|n+1⟩ = sqrt(n+1) f(n+1)`.
    pub fn ladder_element(&self, n: usize) -> f64 {
        ((n + 1) as f64).sqrt() * self.model.level_eps(n, n + 1)
    }

    /// Even ladder operator from the closed form.
    pub fn analytic_ladder(&self) -> DMatrix<C> {
        let m = self.levels;
        DMatrix::from_fn(m, m, |i, j| {
            if j == i + 1 {
                C::new(self.ladder_element(i), 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        })
    }
}

/// Positive-energy blocks of the even parts of `a` and `a†`.
#[derive(Debug, Clone)]
pub struct EvenLadder {
    pub a: DMatrix<C>,
    pub a_dag: DMatrix<C>,
}

/// Even parts of the transverse ladder operators, computed with the
/// matrix oracle and read off in the energy frame.
pub fn even_ladder(model: &RotatorModel) -> Result<EvenLadder> {
    let basis = model.basis();
    let h = build_hamiltonian(model.energy_model(), &basis)?;
    let lambda = sign_operator(&h)?;
    let frame = EnergyFrame::new(&h)?;
    let a = ladder_operator(&basis)?;
    let a_even = even_part(&a, &lambda)?;
    let a_dag_even = even_part(&a.adjoint(), &lambda)?;
    Ok(EvenLadder {
        a: frame.positive_block(&a_even)?,
        a_dag: frame.positive_block(&a_dag_even)?,
    })
}

/// Diagonal of `[A, A†]` and the largest off-diagonal magnitude.
///
/// The last level is dropped: there the truncated commutator carries the
/// usual `−n` edge term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub diagonal: Vec<f64>,
    pub max_off_diagonal: f64,
}

impl CommutatorReport {
    /// `max |diag − 1|`.
    pub fn max_deviation(&self) -> f64 {
        self.diagonal.iter().fold(0.0f64, |m, d| m.max((d - 1.0).abs()))
    }
}

pub fn deformed_commutator(model: &RotatorModel) -> Result<CommutatorReport> {
    let l = even_ladder(model)?;
    let c = &l.a * &l.a_dag - &l.a_dag * &l.a;
    let m = c.nrows() - 1;
    let mut off = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                off = off.max(c[(i, j)].norm());
            }
        }
    }
    Ok(CommutatorReport {
        diagonal: (0..m).map(|i| c[(i, i)].re).collect(),
        max_off_diagonal: off,
    })
}

/// Orbit radius and centroid track, lengths in the units' length scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSeries {
    pub times: Vec<f64>,
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dt: f64,
    /// Cyclotron angular frequency of the model.
    pub omega: f64,
}

impl OrbitSeries {
    /// CSV with `#` metadata lines and columns `t,r,x,y`.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[(&str, String)]) -> Result<()> {
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "t,r,x,y")?;
        for i in 0..self.times.len() {
            writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e}", self.times[i], self.r[i], self.x[i], self.y[i])?;
        }
        Ok(())
    }

    /// `(max r − min r)/(max r + min r)`; zero for an empty or vanishing series.
    pub fn modulation_depth(&self) -> f64 {
        let (lo, hi) = self
            .r
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi + lo > 0.0 && lo.is_finite() {
            (hi - lo) / (hi + lo)
        } else {
            0.0
        }
    }
}

/// Time series of the orbit radius for a Fock expansion.
///
/// `⟨A(t)⟩ = Σ c_n* c_{n+1} sqrt(n+1) f(n+1) exp(−iΔ_n t/ħ)`. The step must
/// give at least eight samples per period of the fastest spacing present.
pub fn orbit_series(
    state: &FockExpansion,
    model: &RotatorModel,
    spectrum: Spectrum,
    t_max: f64,
    dt: f64,
) -> Result<OrbitSeries> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::domain(format!("t_max must be non-negative, got {t_max}")));
    }
    let hbar = model.units().hbar;
    let c = state.coefficients();
    let terms: Vec<(C, f64)> = (0..c.len().saturating_sub(1))
        .map(|n| (c[n].conj() * c[n + 1] * model.ladder_element(n), model.spacing(n, spectrum) / hbar))
        .collect();
    let omega_max = terms
        .iter()
        .filter(|(w, _)| w.norm() > 0.0)
        .fold(0.0f64, |m, &(_, f)| m.max(f));
    if omega_max > 0.0 && dt > 2.0 * PI / (8.0 * omega_max) {
        return Err(Error::Sampling(format!(
            "dt = {dt} gives fewer than 8 samples per period 2π/{omega_max:.6e}; use dt <= {:.6e}",
            2.0 * PI / (8.0 * omega_max)
        )));
    }
    let count = (t_max / dt + 1e-9).floor() as usize + 1;
    let scale = 2f64.sqrt() * model.ladder_length();
    // Phases advance by a fixed rotation per step; each chunk restarts from
    // exact phases so rounding does not accumulate.
    const CHUNK: usize = 1024;
    let steps: Vec<C> = terms.iter().map(|&(_, f)| C::from_polar(1.0, -f * dt)).collect();
    let samples: Vec<(f64, C)> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(count);
            let mut phase: Vec<C> = terms
                .iter()
                .map(|&(w, f)| w * C::from_polar(1.0, -f * start as f64 * dt))
                .collect();
            let mut out = Vec::with_capacity(end - start);
            for i in start..end {
                let mean: C = phase.iter().sum();
                out.push((i as f64 * dt, mean * scale));
                for (p, s) in phase.iter_mut().zip(&steps) {
                    *p *= s;
                }
            }
            out
        })
        .collect();
    Ok(OrbitSeries {
        times: samples.iter().map(|s| s.0).collect(),
        r: samples.iter().map(|s| s.1.norm()).collect(),
        x: samples.iter().map(|s| s.1.re).collect(),
        y: samples.iter().map(|s| s.1.im).collect(),
        dt,
        omega: model.cyclotron_frequency(),
    })
}

/// Same mean `⟨A(t)⟩` obtained by exponentiating the full Feshbach–Villars
/// Hamiltonian and taking the charge expectation of the even ladder
/// operator. Returns the largest deviation from the phase formula.
pub fn orbit_matrix_check(state: &FockExpansion, model: &RotatorModel, times: &[f64]) -> Result<f64> {
    let c = state.coefficients();
    if c.len() + 1 > model.levels() {
        return Err(Error::resolution(
            format!("state with {} levels needs a larger basis than {}", c.len(), model.levels()),
            Some(c.len() + 1),
        ));
    }
    let basis = model.basis();
    let m = model.levels();
    let h = build_hamiltonian(model.energy_model(), &basis)?;
    let lambda = sign_operator(&h)?;
    let frame = EnergyFrame::new(&h)?;
    let a_even = even_part(&ladder_operator(&basis)?, &lambda)?;
    let mut e = vec![C::new(0.0, 0.0); 2 * m];
    e[..c.len()].copy_from_slice(c);
    let v0 = frame.transform().apply(&e)?;
    let v0 = DVector::from_vec(v0);
    let hbar = model.units().hbar;
    let scale = 2f64.sqrt() * model.ladder_length();
    let mut worst = 0.0f64;
    for &t in times {
        let u = (h.matrix() * C::new(0.0, -t / hbar)).exp();
        let v: Vec<C> = (u * &v0).iter().copied().collect();
        let mean = charge_expectation(&a_even, &v)?;
        let phase: C = (0..c.len() - 1)
            .map(|n| c[n].conj() * c[n + 1] * model.ladder_element(n) * C::from_polar(1.0, -model.spacing(n, Spectrum::Relativistic) * t / hbar))
            .sum();
        worst = worst.max((mean - phase).norm() * scale);
    }
    Ok(worst)
}

/// Spectral peak, angular frequency and sinusoid amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub frequency: f64,
    pub amplitude: f64,
}

/// Peaks of the detrended, Hann-windowed magnitude spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpectrum {
    /// Sorted by decreasing amplitude.
    pub peaks: Vec<Peak>,
    /// Bin spacing (angular frequency).
    pub resolution: f64,
    /// Set when the series spans fewer than four periods of the dominant peak.
    pub warning: Option<String>,
}

impl ModulationSpectrum {
    pub fn dominant(&self) -> Option<Peak> {
        self.peaks.first().copied()
    }

    pub fn lowest(&self) -> Option<Peak> {
        self.peaks.iter().copied().min_by(|a, b| a.frequency.total_cmp(&b.frequency))
    }
}

/// Relative threshold for a peak against the largest one.
const PEAK_FRACTION: f64 = 0.05;

/// Peaks of a uniformly sampled series with step `dt`.
pub fn modulation_spectrum(values: &[f64], dt: f64) -> Result<ModulationSpectrum> {
    let n = values.len();
    if n < 8 {
        return Err(Error::Sampling(format!("need at least 8 samples, got {n}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    // Least-squares linear detrend.
    let nf = n as f64;
    let mx = (nf - 1.0) / 2.0;
    let my = values.iter().sum::<f64>() / nf;
    let sxy: f64 = values.iter().enumerate().map(|(i, v)| (i as f64 - mx) * (v - my)).sum();
    let sxx: f64 = (0..n).map(|i| (i as f64 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let window: Vec<f64> = (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (nf - 1.0)).cos()).collect();
    let wsum: f64 = window.iter().sum();
    let mut buf: Vec<C> = values
        .iter()
        .enumerate()
        .map(|(i, v)| C::new((v - my - slope * (i as f64 - mx)) * window[i], 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let mag: Vec<f64> = buf[..=half].iter().map(|z| 2.0 * z.norm() / wsum).collect();
    let resolution = 2.0 * PI / (nf * dt);
    let top = mag[1..].iter().copied().fold(0.0f64, f64::max);
    let mut peaks = Vec::new();
    if top > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        for k in 1..=half {
            let left = mag[k - 1];
            let right = if k < half { mag[k + 1] } else { 0.0 };
            if mag[k] >= PEAK_FRACTION * top && mag[k] > left && mag[k] >= right {
                // Parabolic refinement of the bin position.
                let shift = if k < half {
                    let den = left - 2.0 * mag[k] + right;
                    if den != 0.0 {
                        (0.5 * (left - right) / den).clamp(-0.5, 0.5)
                    } else {
                        0.0
                    }
                } else {
                    0.0
                };
                peaks.push(Peak {
                    frequency: (k as f64 + shift) * resolution,
                    amplitude: mag[k],
                });
            }
        }
    }
    peaks.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    let span = (nf - 1.0) * dt;
    let warning = peaks.first().and_then(|p| {
        let period = 2.0 * PI / p.frequency;
        (span < 4.0 * period).then(|| {
            format!("series spans {span:.4e}, fewer than 4 periods of the dominant peak ({period:.4e})")
        })
    });
    Ok(ModulationSpectrum { peaks, resolution, warning })
}

/// Gaussian fit `r ≈ r0 exp(−γ t²)` over the first collapse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingFit {
    pub rate: f64,
    /// `1/sqrt(γ)`.
    pub collapse_time: f64,
    pub points: usize,
}

/// Fit the envelope decay until `r` first falls to half its initial value.
pub fn damping_fit(series: &OrbitSeries) -> Result<DampingFit> {
    let r0 = *series.r.first().ok_or_else(|| Error::Sampling("empty series".into()))?;
    if !(r0 > 0.0) {
        return Err(Error::domain("orbit radius vanishes at t = 0"));
    }
    let end = series
        .r
        .iter()
        .position(|&r| r < 0.5 * r0)
        .ok_or_else(|| Error::domain("orbit radius never falls to half its initial value"))?;
    if end < 3 {
        return Err(Error::Sampling(format!("collapse resolved by only {end} samples")));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..end {
        let t2 = series.times[i].powi(2);
        num += t2 * (series.r[i] / r0).ln();
        den += t2 * t2;
    }
    let rate = -num / den;
    if !(rate > 0.0) {
        return Err(Error::numerical(format!("non-decaying envelope fit (γ = {rate:e})")));
    }
    Ok(DampingFit {
        rate,
        collapse_time: rate.sqrt().recip(),
        points: end,
    })
}

/// Norm of the commutator of the even transverse ladder operator with the
/// even longitudinal position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub norm: f64,
    pub levels: usize,
    pub pz_nodes: usize,
    pub dimension: usize,
}

fn check_joint(model: &RotatorModel, pz: &MomentumGrid) -> Result<usize> {
    let dim = model.levels() * pz.len();
    if dim > MAX_JOINT_DIM {
        return Err(Error::config(format!(
            "joint basis {} x {} = {dim} exceeds {MAX_JOINT_DIM}",
            model.levels(),
            pz.len()
        )));
    }
    Ok(dim)
}

/// Spectral norm of the positive-energy block of `[A_even, Z_even]`.
///
/// In the energy frame `A_even` connects level `n+1` to `n` only and
/// `Z_even` stays within a level, so the commutator is a block shift and its
/// norm is the largest singular value over the `n → n+1` blocks.
pub fn translational_coupling(model: &RotatorModel, pz: &MomentumGrid) -> Result<CouplingReport> {
    let dimension = check_joint(model, pz)?;
    let u = model.units();
    let em = model.energy_model();
    let k = pz.len();
    let d = spectral_derivative_matrix(k, pz.spacing());
    let p = pz.nodes();
    let energy: Vec<Vec<f64>> = (0..model.levels())
        .map(|n| p.iter().map(|&pz| em.landau_energy(n, pz)).collect())
        .collect();
    let z_block = |n: usize| {
        DMatrix::from_fn(k, k, |i, j| {
            C::new(0.0, u.hbar * d[i * k + j] * eps_from_energies(energy[n][i], energy[n][j]))
        })
    };
    let norm = (0..model.levels() - 1)
        .into_par_iter()
        .map(|n| {
            let amp: Vec<f64> = (0..k)
                .map(|i| ((n + 1) as f64).sqrt() * eps_from_energies(energy[n][i], energy[n + 1][i]))
                .collect();
            let (zn, zn1) = (z_block(n), z_block(n + 1));
            let c = DMatrix::from_fn(k, k, |i, j| zn1[(i, j)] * amp[i] - zn[(i, j)] * amp[j]);
            c.singular_values().max()
        })
        .reduce(|| 0.0, f64::max);
    Ok(CouplingReport {
        norm,
        levels: model.levels(),
        pz_nodes: k,
        dimension,
    })
}

/// Same quantity from dense Feshbach–Villars matrices (oracle; small bases).
pub fn translational_coupling_dense(model: &RotatorModel, pz: &MomentumGrid) -> Result<f64> {
    check_joint(model, pz)?;
    let basis = BasisSpec::OscillatorMomentum {
        levels: model.levels(),
        pz: *pz,
    };
    let h = build_hamiltonian(model.energy_model(), &basis)?;
    let lambda = sign_operator(&h)?;
    let frame = EnergyFrame::new(&h)?;
    let a = even_part(&ladder_operator(&basis)?, &lambda)?;
    let z = even_part(&longitudinal_position(&basis, model.units())?, &lambda)?;
    let comm: OperatorMatrix = a.commutator(&z)?;
    Ok(frame.positive_block(&comm)?.singular_values().max())
}

/// `|⟨a⟩ − α| / |α|` for the nonlinear coherent state: how far the mean of
/// the undeformed ladder operator departs from the label `α`.
pub fn first_moment_deviation(state: &FockExpansion, alpha: C) -> f64 {
    let c = state.coefficients();
    let mean: C = (0..c.len().saturating_sub(1))
        .map(|n| c[n].conj() * c[n + 1] * ((n + 1) as f64).sqrt())
        .sum();
    if alpha.norm() == 0.0 {
        mean.norm()
    } else {
        (mean - alpha).norm() / alpha.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv::positive_levels;
    use crate::states::rotator_coherent_state;

    fn rot(b: f64, levels: usize) -> RotatorModel {
        RotatorModel::new(UnitSystem::natural(), b, levels).unwrap()
    }

    #[test]
    fn oracle_ladder_matches_deformation() {
        let m = rot(1.0, 64);
        let l = even_ladder(&m).unwrap();
        let analytic = m.analytic_ladder();
        let diff = (&l.a - &analytic).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(diff < 1e-10, "{diff}");
        assert!((l.a[(0, 1)].re - 1.0150517651).abs() < 1e-6);
        // f from the numerically diagonalized spectrum.
        let h = build_hamiltonian(m.energy_model(), &m.basis()).unwrap();
        let e = positive_levels(&h, 16).unwrap();
        for n in 1..16 {
            let f = eps_from_energies(e[n - 1], e[n]);
            assert!((f - m.energy_model().deformation_f(n).unwrap()).abs() < 1e-6);
        }
        assert!((&l.a_dag - l.a.adjoint()).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn ladder_annihilates_ground_state() {
        let l = even_ladder(&rot(0.7, 32)).unwrap();
        assert!(l.a.column(0).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn undeformed_limit() {
        let m = rot(1e-8, 32);
        let l = even_ladder(&m).unwrap();
        let a = crate::fv::ladder_matrix(32);
        assert!((&l.a - a).iter().all(|z| z.norm() < 1e-5));
        let c = deformed_commutator(&m).unwrap();
        assert!(c.max_deviation() < 1e-5);
    }

    #[test]
    fn commutator_diagonal() {
        let c = deformed_commutator(&rot(1.0, 64)).unwrap();
        let f1 = rot(1.0, 4).energy_model().deformation_f(1).unwrap();
        assert!((c.diagonal[0] - f1 * f1).abs() < 1e-10);
        assert!(c.max_off_diagonal < 1e-10);
        assert!(c.max_deviation() > 1e-2);
        let devs: Vec<f64> = [0.1, 0.5, 1.0, 2.0]
            .iter()
            .map(|&b| deformed_commutator(&rot(b, 32)).unwrap().max_deviation())
            .collect();
        assert!(devs.windows(2).all(|w| w[1] > w[0]), "{devs:?}");
    }

    #[test]
    fn equal_spacing_gives_constant_radius() {
        let m = rot(0.5, 64);
        let s = rotator_coherent_state(C::new(3.0, 0.0), m.energy_model(), 60).unwrap();
        let o = orbit_series(&s, &m, Spectrum::EquallySpaced, 500.0, 0.5).unwrap();
        let r0 = o.r[0];
        assert!(o.r.iter().all(|r| ((r - r0) / r0).abs() < 1e-10));
        assert!(modulation_spectrum(&o.r, o.dt).unwrap().peaks.is_empty());
    }

    #[test]
    fn initial_mean_is_alpha() {
        let m = rot(1.0, 64);
        let alpha = C::new(2.0, 0.5);
        let s = rotator_coherent_state(alpha, m.energy_model(), 60).unwrap();
        let o = orbit_series(&s, &m, Spectrum::Relativistic, 0.0, 0.1).unwrap();
        let scale = 2f64.sqrt() * m.ladder_length();
        assert!((o.x[0] / scale - alpha.re).abs() < 1e-10);
        assert!((o.y[0] / scale - alpha.im).abs() < 1e-10);
    }

    #[test]
    fn ground_state_has_zero_radius() {
        let m = rot(0.5, 16);
        let s = rotator_coherent_state(C::new(0.0, 0.0), m.energy_model(), 8).unwrap();
        let o = orbit_series(&s, &m, Spectrum::Relativistic, 10.0, 0.5).unwrap();
        assert!(o.r.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn undersampling_rejected() {
        let m = rot(0.5, 32);
        let s = rotator_coherent_state(C::new(1.0, 0.0), m.energy_model(), 24).unwrap();
        let e = orbit_series(&s, &m, Spectrum::Relativistic, 10.0, 3.0).unwrap_err();
        assert!(matches!(e, Error::Sampling(_)));
    }

    #[test]
    fn matrix_exponential_agrees() {
        let m = rot(1.0, 40);
        let s = rotator_coherent_state(C::new(1.5, 0.0), m.energy_model(), 30).unwrap();
        let err = orbit_matrix_check(&s, &m, &[0.0, 1.0, 3.7, 10.0]).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn sinusoid_spectrum() {
        let dt = 0.1;
        let w = 1.3;
        let v: Vec<f64> = (0..4000).map(|i| 2.0 + 0.5 * (w * i as f64 * dt).sin()).collect();
        let s = modulation_spectrum(&v, dt).unwrap();
        assert_eq!(s.peaks.len(), 1, "{s:?}");
        assert!((s.peaks[0].frequency - w).abs() < s.resolution);
        assert!((s.peaks[0].amplitude - 0.5).abs() < 0.05);
        assert!(s.warning.is_none());
        assert!(modulation_spectrum(&[1.0; 64], dt).unwrap().peaks.is_empty());
    }

    #[test]
    fn relativistic_orbit_is_modulated() {
        let m = rot(0.5, 96);
        let s = rotator_coherent_state(C::new(3.0, 0.0), m.energy_model(), 80).unwrap();
        let o = orbit_series(&s, &m, Spectrum::Relativistic, 2000.0, 0.1).unwrap();
        assert!(o.modulation_depth() > 0.01);
        let spec = modulation_spectrum(&o.r, o.dt).unwrap();
        assert!(spec.dominant().unwrap().frequency < 0.2 * o.omega);
        let fit = damping_fit(&o).unwrap();
        assert!(fit.collapse_time > 0.0);
    }

    #[test]
    fn coupling_matches_dense_oracle() {
        let m = rot(1.0, 6);
        let pz = MomentumGrid::new(8, 4.0).unwrap();
        let fast = translational_coupling(&m, &pz).unwrap().norm;
        let dense = translational_coupling_dense(&m, &pz).unwrap();
        assert!((fast - dense).abs() < 1e-9 * dense.max(1.0), "{fast} {dense}");
    }

    #[test]
    fn coupling_limits() {
        let pz = MomentumGrid::new(32, 4.0).unwrap();
        let small = translational_coupling(&rot(1e-8, 64), &pz).unwrap().norm;
        let big = translational_coupling(&rot(1.0, 64), &pz).unwrap().norm;
        assert!(small < 1e-4, "{small}");
        assert!(big > 1e-3, "{big}");
        let err = translational_coupling(&rot(1.0, 65), &pz).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
    }
}
