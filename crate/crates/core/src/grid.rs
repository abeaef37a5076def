//! Uniform momentum and phase-space grids, quadrature and the discrete
//! Fourier pair linking momentum and position.

use std::f64::consts::PI;
use std::fmt;
use std::iter::Sum;
use std::ops::Mul;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::UnitSystem;

/// Uniform momentum grid `p_k = -p_max + k Δp`, `k = 0..n`, `Δp = 2 p_max / n`.
///
/// The grid is periodic: `p_max` itself is not a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    n: usize,
    p_max: f64,
}

impl MomentumGrid {
    /// `n` must be a multiple of 4 and at least 8.
    pub fn new(n: usize, p_max: f64) -> Result<Self> {
        if n < 8 || n % 4 != 0 {
            return Err(Error::config(format!(
                "momentum grid needs a multiple of 4 nodes (>= 8), got {n}"
            )));
        }
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(Error::domain(format!("p_max must be positive, got {p_max}")));
        }
        Ok(Self { n, p_max })
    }

    /// Smallest power-of-two grid resolving a Gaussian packet of position width
    /// `sigma` centred at `p_bar`: `Δp < ħ/(4σ)` and `p_max >= |p̄| + 10 ħ/σ`.
    ///
    /// The position window is also kept above 30 Compton lengths: relativistic
    /// evolution gives wavefunctions tails decaying only like `exp(−|q|/λ_c)`.
    pub fn for_packet(sigma: f64, p_bar: f64, units: &UnitSystem) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        let hbar = units.hbar;
        let p_max = p_bar.abs() + 10.0 * hbar / sigma;
        let dp_target = (hbar / (4.0 * sigma)).min(PI * hbar / (30.0 * units.compton_length()));
        let mut n = 64usize;
        while 2.0 * p_max / n as f64 >= dp_target {
            n *= 2;
            if n > 1 << 22 {
                return Err(Error::resolution("packet needs more than 2^22 nodes", Some(n)));
            }
        }
        Self::new(n, p_max)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.p_max / self.n as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.p_max + k as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.node(k)).collect()
    }

    /// Nearest node index to `p`, if `p` lies inside the grid.
    pub fn index_of(&self, p: f64) -> Option<usize> {
        let x = ((p + self.p_max) / self.spacing()).round();
        (x >= 0.0 && x < self.n as f64).then_some(x as usize)
    }

    /// Position window `π ħ / Δp` of the conjugate grid.
    pub fn conjugate_q_max(&self, hbar: f64) -> f64 {
        PI * hbar / self.spacing()
    }

    /// Rectangle rule, spectrally accurate for smooth functions that decay
    /// at the window edges.
    pub fn integrate<T>(&self, values: &[T]) -> Result<T>
    where
        T: Copy + Sum<T> + Mul<f64, Output = T>,
    {
        if values.len() != self.n {
            return Err(Error::dimension(format!(
                "quadrature over {} samples on a {}-node grid",
                values.len(),
                self.n
            )));
        }
        Ok(values.iter().copied().sum::<T>() * self.spacing())
    }
}

impl fmt::Display for MomentumGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} nodes on [-{}, {})", self.n, self.p_max, self.p_max)
    }
}

/// Product of a momentum axis and a position axis.
///
/// Grids built with [`PhaseSpaceGrid::conjugate`] satisfy `Δq Δp = 2πħ / n`
/// and are the only ones accepted by the discrete Fourier pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    momentum: MomentumGrid,
    n_q: usize,
    q_max: f64,
}

impl PhaseSpaceGrid {
    /// Arbitrary position axis `q_l = -q_max + l Δq`.
    pub fn new(momentum: MomentumGrid, n_q: usize, q_max: f64) -> Result<Self> {
        if n_q < 8 || n_q % 2 != 0 {
            return Err(Error::config(format!("position axis needs an even number (>= 8) of nodes, got {n_q}")));
        }
        if !(q_max.is_finite() && q_max > 0.0) {
            return Err(Error::domain(format!("q_max must be positive, got {q_max}")));
        }
        Ok(Self { momentum, n_q, q_max })
    }

    /// Position axis conjugate to `momentum` under the DFT.
    pub fn conjugate(momentum: MomentumGrid, hbar: f64) -> Self {
        Self {
            momentum,
            n_q: momentum.len(),
            q_max: momentum.conjugate_q_max(hbar),
        }
    }

    pub fn momentum(&self) -> &MomentumGrid {
        &self.momentum
    }

    pub fn n_p(&self) -> usize {
        self.momentum.len()
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_p(), self.n_q)
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn q_spacing(&self) -> f64 {
        2.0 * self.q_max / self.n_q as f64
    }

    pub fn p_spacing(&self) -> f64 {
        self.momentum.spacing()
    }

    pub fn q_node(&self, l: usize) -> f64 {
        -self.q_max + l as f64 * self.q_spacing()
    }

    pub fn q_nodes(&self) -> Vec<f64> {
        (0..self.n_q).map(|l| self.q_node(l)).collect()
    }

    pub fn p_nodes(&self) -> Vec<f64> {
        self.momentum.nodes()
    }

    /// Area of one phase-space cell.
    pub fn cell_area(&self) -> f64 {
        self.p_spacing() * self.q_spacing()
    }

    pub fn is_conjugate(&self, hbar: f64) -> bool {
        let target = 2.0 * PI * hbar / self.n_q as f64;
        self.n_q == self.n_p() && (self.cell_area() - target).abs() <= 1e-12 * target
    }

    pub fn require_conjugate(&self, hbar: f64) -> Result<()> {
        if self.is_conjugate(hbar) {
            Ok(())
        } else {
            Err(Error::config(format!(
                "phase-space grid is not conjugate: ΔqΔp = {:.6e}, expected 2πħ/n = {:.6e}",
                self.cell_area(),
                2.0 * PI * hbar / self.n_q as f64
            )))
        }
    }
}

/// Sign of the exponent in a Fourier kernel `exp(± i p q / ħ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSign {
    Plus,
    Minus,
}

/// Discrete Fourier pair on a conjugate grid, normalised so that it is
/// unitary with respect to the rectangle-rule inner products:
///
/// `forward`: `g(q_l) = (2πħ)^{-1/2} Σ_k f(p_k) e^{-i p_k q_l/ħ} Δp`
///
/// `inverse`: `f(p_k) = (2πħ)^{-1/2} Σ_l g(q_l) e^{+i p_k q_l/ħ} Δq`
#[derive(Clone)]
pub struct FourierPair {
    grid: PhaseSpaceGrid,
    hbar: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FourierPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierPair")
            .field("grid", &self.grid)
            .field("hbar", &self.hbar)
            .finish()
    }
}

impl FourierPair {
    pub fn new(grid: PhaseSpaceGrid, hbar: f64) -> Result<Self> {
        grid.require_conjugate(hbar)?;
        let mut planner = FftPlanner::new();
        let n = grid.n_p();
        Ok(Self {
            grid,
            hbar,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn len(&self) -> usize {
        self.grid.n_p()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::dimension(format!(
                "transform of {n} samples on a {}-node grid",
                self.len()
            )));
        }
        Ok(())
    }

    // (p_k q_l)/ħ = 2πkl/n - πk - πl + πn/2, and n is a multiple of 4.
    fn run(&self, data: &mut [Complex64], sign: KernelSign, scale: f64) {
        for (k, v) in data.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
        match sign {
            KernelSign::Minus => self.fwd.process(data),
            KernelSign::Plus => self.inv.process(data),
        }
        for (l, v) in data.iter_mut().enumerate() {
            *v *= if l % 2 == 1 { -scale } else { scale };
        }
    }

    /// In-place `p → q` transform with kernel `exp(± i p q/ħ)`.
    pub fn p_to_q_in_place(&self, data: &mut [Complex64], sign: KernelSign) -> Result<()> {
        self.check_len(data.len())?;
        let scale = self.grid.p_spacing() / (2.0 * PI * self.hbar).sqrt();
        self.run(data, sign, scale);
        Ok(())
    }

    /// In-place `q → p` transform with kernel `exp(± i p q/ħ)`.
    pub fn q_to_p_in_place(&self, data: &mut [Complex64], sign: KernelSign) -> Result<()> {
        self.check_len(data.len())?;
        let scale = self.grid.q_spacing() / (2.0 * PI * self.hbar).sqrt();
        self.run(data, sign, scale);
        Ok(())
    }

    pub fn forward(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = values.to_vec();
        self.p_to_q_in_place(&mut out, KernelSign::Minus)?;
        Ok(out)
    }

    pub fn inverse(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = values.to_vec();
        self.q_to_p_in_place(&mut out, KernelSign::Plus)?;
        Ok(out)
    }

    /// Position wavefunction `ψ(q) = (2πħ)^{-1/2} ∫ φ(p) e^{+ipq/ħ} dp`.
    pub fn wavefunction(&self, phi: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = phi.to_vec();
        self.p_to_q_in_place(&mut out, KernelSign::Plus)?;
        Ok(out)
    }

    /// Inverse of [`FourierPair::wavefunction`].
    pub fn momentum_amplitude(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = psi.to_vec();
        self.q_to_p_in_place(&mut out, KernelSign::Minus)?;
        Ok(out)
    }
}

/// Signed FFT frequency index for bin `m` of an `n`-point transform.
pub(crate) fn fft_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Angular wavenumbers of the FFT bins for samples with spacing `h`.
/// The Nyquist bin is reported as negative.
pub fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let base = 2.0 * PI / (n as f64 * h);
    (0..n).map(|m| base * fft_index(m, n) as f64).collect()
}

/// Derivative of the periodic trigonometric interpolant of `values`
/// (Nyquist mode dropped).
pub fn spectral_derivative(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let mut buf = values.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    let k = wavenumbers(n, h);
    for (m, v) in buf.iter_mut().enumerate() {
        *v = if 2 * m == n {
            Complex64::new(0.0, 0.0)
        } else {
            *v * Complex64::new(0.0, k[m] / n as f64)
        };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Dense spectral differentiation matrix for `n` (even) periodic samples
/// with spacing `h`:
/// `D_ij = (π/(n h)) (-1)^{i-j} cot(π (i-j)/n)`, `D_ii = 0`. Row-major.
pub fn spectral_derivative_matrix(n: usize, h: f64) -> Vec<f64> {
    let scale = PI / (n as f64 * h);
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let diff = i as i64 - j as i64;
                let sign = if diff.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                d[i * n + j] = scale * sign / (PI * diff as f64 / n as f64).tan();
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_nodes() {
        let g = MomentumGrid::new(8, 4.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.node(0), -4.0);
        assert_eq!(g.node(4), 0.0);
        assert_eq!(g.index_of(0.2), Some(4));
        assert_eq!(g.index_of(9.0), None);
        assert!(MomentumGrid::new(10, 1.0).is_err());
        assert!(MomentumGrid::new(16, 0.0).is_err());
    }

    #[test]
    fn quadrature_of_gaussian() {
        let g = MomentumGrid::new(128, 10.0).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|p| (-p * p).exp()).collect();
        assert!((g.integrate(&v).unwrap() - PI.sqrt()).abs() < 1e-13);
        assert!(g.integrate(&v[..10]).is_err());
    }

    #[test]
    fn conjugacy() {
        let m = MomentumGrid::new(64, 8.0).unwrap();
        let ps = PhaseSpaceGrid::conjugate(m, 1.0);
        assert!(ps.is_conjugate(1.0));
        assert!(!ps.is_conjugate(0.5));
        let off = PhaseSpaceGrid::new(m, 64, 10.0).unwrap();
        assert!(matches!(FourierPair::new(off, 1.0), Err(Error::Configuration(_))));
    }

    #[test]
    fn gaussian_transform_is_gaussian() {
        // φ(p) = π^{-1/4} e^{-p²/2} ↔ ψ(q) = π^{-1/4} e^{-q²/2} for ħ = 1.
        let m = MomentumGrid::new(64, 12.0).unwrap();
        let fp = FourierPair::new(PhaseSpaceGrid::conjugate(m, 1.0), 1.0).unwrap();
        let phi: Vec<_> = m.nodes().iter().map(|p| c((-p * p / 2.0).exp() / PI.powf(0.25))).collect();
        let psi = fp.forward(&phi).unwrap();
        for (l, v) in psi.iter().enumerate() {
            let q = fp.grid().q_node(l);
            let exact = (-q * q / 2.0).exp() / PI.powf(0.25);
            assert!((v - c(exact)).norm() < 1e-12, "l={l}");
        }
    }

    #[test]
    fn shifted_packet_sign_convention() {
        // φ(p) centred at 0 with phase e^{-i p q0/ħ} lives at q = +q0 under `wavefunction`.
        let hbar = 0.7;
        let m = MomentumGrid::new(128, 14.0).unwrap();
        let fp = FourierPair::new(PhaseSpaceGrid::conjugate(m, hbar), hbar).unwrap();
        let q0 = 2.5;
        let phi: Vec<_> = m
            .nodes()
            .iter()
            .map(|&p| Complex64::from_polar((-p * p / 2.0).exp(), -p * q0 / hbar))
            .collect();
        let psi = fp.wavefunction(&phi).unwrap();
        let (imax, _) = psi
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert!((fp.grid().q_node(imax) - q0).abs() <= fp.grid().q_spacing());
        let back = fp.momentum_amplitude(&psi).unwrap();
        for (a, b) in back.iter().zip(&phi) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_matrix_matches_fft() {
        let n = 32;
        let h = 0.4;
        let d = spectral_derivative_matrix(n, h);
        let x: Vec<Complex64> = (0..n)
            .map(|k| {
                let p = -6.4 + k as f64 * h;
                Complex64::new((-p * p).exp(), p * (-p * p / 2.0).exp())
            })
            .collect();
        let via_fft = spectral_derivative(&x, h);
        for i in 0..n {
            let row: Complex64 = (0..n).map(|j| x[j] * d[i * n + j]).sum();
            assert!((row - via_fft[i]).norm() < 1e-12, "row {i}");
        }
        // Antisymmetric.
        for i in 0..n {
            for j in 0..n {
                assert!((d[i * n + j] + d[j * n + i]).abs() < 1e-12);
            }
        }
    }
}
